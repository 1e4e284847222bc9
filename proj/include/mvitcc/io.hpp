#pragma once

// File formats:
//  * view matrices: MatrixMarket-style coordinate text, 1-based indices;
//  * label files: one nonnegative integer per line;
//  * dataset manifest: JSON binding views and labels together;
//  * fit results: CSV files plus report.json.
// Numbers are written locale-free with 17 significant digits.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mvitcc/info.hpp"
#include "mvitcc/metrics.hpp"
#include "mvitcc/solver.hpp"

namespace mvitcc {

struct ManifestView {
  std::string matrix_path;
  std::optional<std::size_t> feature_cluster_count;
};

struct DatasetManifest {
  std::optional<std::size_t> n_samples;
  std::vector<ManifestView> views;
  std::optional<std::string> labels_path;
  std::optional<std::string> name;
};

struct LoadedDataset {
  DatasetManifest manifest;
  std::vector<ViewMatrix> views;
  std::optional<std::vector<std::uint32_t>> labels;

  std::size_t n_samples() const { return views.front().n_rows(); }
};

std::string format_double(double v);

ViewMatrix parse_view_matrix(std::istream& in, const std::string& source = "<stream>");
ViewMatrix read_view_matrix(const std::filesystem::path& path);
void write_view_matrix(const std::filesystem::path& path, const ViewMatrix& m);

std::vector<std::uint32_t> parse_labels(std::istream& in, std::size_t n,
                                        const std::string& source = "<stream>");
std::vector<std::uint32_t> read_labels(const std::filesystem::path& path, std::size_t n);
/// Reads either a plain label file or a `sample_index,cluster` CSV (as
/// written by write_fit_result); the length is not checked.
std::vector<std::uint32_t> read_predictions(const std::filesystem::path& path);
void write_labels(const std::filesystem::path& path, std::span<const std::uint32_t> labels);

DatasetManifest parse_manifest(std::istream& in, const std::string& source = "<stream>");
LoadedDataset read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);

void write_fit_result(const FitResult& result, const std::filesystem::path& out_dir);
void write_metric_report(const MetricReport& report, const std::filesystem::path& path);

struct SweepRow {
  double lambda = 0.0;
  std::vector<double> weights;
  double objective = 0.0;
  std::vector<double> losses;
  std::optional<MetricReport> metrics;
};

void write_sweep(const std::vector<SweepRow>& rows, const std::filesystem::path& path);

}  // namespace mvitcc
