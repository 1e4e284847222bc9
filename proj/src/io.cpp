#include "mvitcc/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <string_view>

#include <json.hpp>

namespace mvitcc {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    const std::size_t start = i;
    while (i < s.size() && s[i] != ' ' && s[i] != '\t') ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

[[noreturn]] void parse_fail(const std::string& source, std::size_t line, const std::string& what) {
  throw Error(ErrorKind::kParse, source + ":" + std::to_string(line) + ": " + what);
}

template <class T>
std::optional<T> parse_number(std::string_view token) {
  T value{};
  const auto* end = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(token.data(), end, value);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return value;
}

std::ifstream open_input(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string() + " for reading");
  return in;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot open " + path.string() + " for writing");
  return out;
}

void close_output(std::ofstream& out, const fs::path& path) {
  out.close();
  if (!out) throw Error(ErrorKind::kIo, "failed writing " + path.string());
}

// nlohmann's float output is shortest-round-trip; numbers here must carry
// 17 significant digits, so the dump is done by hand.
void dump_json(const ordered_json& j, std::string& out, int indent) {
  const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
  const std::string inner(static_cast<std::size_t>(indent + 1) * 2, ' ');
  switch (j.type()) {
    case ordered_json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (const auto& [key, value] : j.items()) {
        if (!first) out += ",\n";
        first = false;
        out += inner + ordered_json(key).dump() + ": ";
        dump_json(value, out, indent + 1);
      }
      out += "\n" + pad + "}";
      return;
    }
    case ordered_json::value_t::array: {
      out += "[";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i != 0) out += ", ";
        dump_json(j[i], out, indent + 1);
      }
      out += "]";
      return;
    }
    case ordered_json::value_t::number_float:
      out += format_double(j.get<double>());
      return;
    default:
      out += j.dump();
      return;
  }
}

void write_json(const ordered_json& j, const fs::path& path) {
  std::string text;
  dump_json(j, text, 0);
  text += "\n";
  auto out = open_output(path);
  out << text;
  close_output(out, path);
}

ordered_json metrics_json(const MetricReport& m) {
  ordered_json j;
  j["purity"] = m.purity;
  j["nmi"] = m.nmi;
  j["rand_index"] = m.rand_index;
  return j;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, ptr);
}

// ---------------------------------------------------------------------------
// View matrices

ViewMatrix parse_view_matrix(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t line_no = 0;
  std::optional<std::size_t> n_rows, n_cols, nnz;
  std::vector<Entry> entries;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = trim(line);
    if (text.empty() || text.front() == '%') continue;
    const auto tokens = split_ws(text);
    if (tokens.size() != 3) parse_fail(source, line_no, "expected three fields");
    if (!nnz) {
      n_rows = parse_number<std::size_t>(tokens[0]);
      n_cols = parse_number<std::size_t>(tokens[1]);
      nnz = parse_number<std::size_t>(tokens[2]);
      if (!n_rows || !n_cols || !nnz) parse_fail(source, line_no, "malformed header");
      entries.reserve(*nnz);
      continue;
    }
    const auto row = parse_number<std::size_t>(tokens[0]);
    const auto col = parse_number<std::size_t>(tokens[1]);
    const auto value = parse_number<double>(tokens[2]);
    if (!row || !col || !value) parse_fail(source, line_no, "malformed entry");
    if (*value < 0.0) {
      throw Error(ErrorKind::kDomain,
                  source + ":" + std::to_string(line_no) + ": negative count");
    }
    if (*row < 1 || *row > *n_rows || *col < 1 || *col > *n_cols) {
      throw Error(ErrorKind::kIndex,
                  source + ":" + std::to_string(line_no) + ": index out of range");
    }
    if (entries.size() == *nnz) {
      throw Error(ErrorKind::kFormat, source + ":" + std::to_string(line_no) +
                                          ": more entries than declared in the header");
    }
    entries.push_back({*row - 1, *col - 1, *value});
  }
  if (!nnz) throw Error(ErrorKind::kFormat, source + ": missing header line");
  if (entries.size() != *nnz) {
    throw Error(ErrorKind::kFormat, source + ": header declares " + std::to_string(*nnz) +
                                        " entries, found " + std::to_string(entries.size()));
  }
  try {
    return ViewMatrix(*n_rows, *n_cols, std::move(entries));
  } catch (const Error& e) {
    throw Error(e.kind(), source + ": " + e.what());
  }
}

ViewMatrix read_view_matrix(const fs::path& path) {
  auto in = open_input(path);
  return parse_view_matrix(in, path.string());
}

void write_view_matrix(const fs::path& path, const ViewMatrix& m) {
  std::string text = "%%MatrixMarket matrix coordinate real general\n";
  text += std::to_string(m.n_rows()) + " " + std::to_string(m.n_cols()) + " " +
          std::to_string(m.nnz()) + "\n";
  for (const auto& e : m.entries()) {
    text += std::to_string(e.row + 1) + " " + std::to_string(e.col + 1) + " " +
            format_double(e.value) + "\n";
  }
  auto out = open_output(path);
  out << text;
  close_output(out, path);
}

// ---------------------------------------------------------------------------
// Labels

std::vector<std::uint32_t> parse_labels(std::istream& in, std::size_t n,
                                        const std::string& source) {
  std::vector<std::uint32_t> labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = trim(line);
    if (text.empty()) continue;
    const auto value = parse_number<std::uint32_t>(text);
    if (!value) parse_fail(source, line_no, "expected a nonnegative integer label");
    labels.push_back(*value);
  }
  if (labels.size() != n) {
    throw Error(ErrorKind::kLength, source + ": expected " + std::to_string(n) +
                                        " labels, found " + std::to_string(labels.size()));
  }
  return labels;
}

std::vector<std::uint32_t> read_labels(const fs::path& path, std::size_t n) {
  auto in = open_input(path);
  return parse_labels(in, n, path.string());
}

std::vector<std::uint32_t> read_predictions(const fs::path& path) {
  auto in = open_input(path);
  std::vector<std::uint32_t> labels;
  std::string line;
  std::size_t line_no = 0;
  bool csv = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = trim(line);
    if (text.empty()) continue;
    if (line_no == 1 && text == "sample_index,cluster") {
      csv = true;
      continue;
    }
    std::string_view field = text;
    if (csv) {
      const auto comma = text.find(',');
      if (comma == std::string_view::npos) parse_fail(path.string(), line_no, "expected two fields");
      const auto index = parse_number<std::size_t>(text.substr(0, comma));
      if (!index || *index != labels.size()) {
        parse_fail(path.string(), line_no, "sample indices must be consecutive from 0");
      }
      field = text.substr(comma + 1);
    }
    const auto value = parse_number<std::uint32_t>(field);
    if (!value) parse_fail(path.string(), line_no, "expected a nonnegative integer label");
    labels.push_back(*value);
  }
  return labels;
}

void write_labels(const fs::path& path, std::span<const std::uint32_t> labels) {
  std::string text;
  for (const auto v : labels) text += std::to_string(v) + "\n";
  auto out = open_output(path);
  out << text;
  close_output(out, path);
}

// ---------------------------------------------------------------------------
// Manifest

DatasetManifest parse_manifest(std::istream& in, const std::string& source) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::kParse, source + ": " + e.what());
  }
  DatasetManifest manifest;
  try {
    if (!doc.is_object()) throw Error(ErrorKind::kFormat, source + ": manifest must be an object");
    if (doc.contains("n_samples")) manifest.n_samples = doc.at("n_samples").get<std::size_t>();
    if (doc.contains("name")) manifest.name = doc.at("name").get<std::string>();
    if (doc.contains("labels_path")) manifest.labels_path = doc.at("labels_path").get<std::string>();
    if (!doc.contains("views") || !doc.at("views").is_array() || doc.at("views").empty()) {
      throw Error(ErrorKind::kFormat, source + ": manifest must list at least one view");
    }
    for (const auto& v : doc.at("views")) {
      ManifestView view;
      view.matrix_path = v.at("matrix_path").get<std::string>();
      if (v.contains("feature_cluster_count")) {
        view.feature_cluster_count = v.at("feature_cluster_count").get<std::size_t>();
      }
      manifest.views.push_back(std::move(view));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kFormat, source + ": " + e.what());
  }
  return manifest;
}

LoadedDataset read_manifest(const fs::path& path) {
  auto in = open_input(path);
  LoadedDataset data;
  data.manifest = parse_manifest(in, path.string());
  const fs::path base = path.parent_path();
  const auto resolve = [&](const std::string& p) {
    const fs::path candidate(p);
    return candidate.is_absolute() ? candidate : base / candidate;
  };
  for (std::size_t i = 0; i < data.manifest.views.size(); ++i) {
    data.views.push_back(read_view_matrix(resolve(data.manifest.views[i].matrix_path)));
    const std::size_t expected =
        data.manifest.n_samples.value_or(data.views.front().n_rows());
    if (data.views.back().n_rows() != expected) {
      throw Error(ErrorKind::kConsistency,
                  "view " + std::to_string(i) + " (" + data.manifest.views[i].matrix_path +
                      ") has " + std::to_string(data.views.back().n_rows()) +
                      " rows, expected " + std::to_string(expected));
    }
  }
  if (data.manifest.labels_path) {
    data.labels = read_labels(resolve(*data.manifest.labels_path), data.n_samples());
  }
  return data;
}

void write_manifest(const fs::path& path, const DatasetManifest& manifest) {
  ordered_json doc;
  if (manifest.name) doc["name"] = *manifest.name;
  if (manifest.n_samples) doc["n_samples"] = *manifest.n_samples;
  doc["views"] = ordered_json::array();
  for (const auto& v : manifest.views) {
    ordered_json view;
    view["matrix_path"] = v.matrix_path;
    if (v.feature_cluster_count) view["feature_cluster_count"] = *v.feature_cluster_count;
    doc["views"].push_back(view);
  }
  if (manifest.labels_path) doc["labels_path"] = *manifest.labels_path;
  write_json(doc, path);
}

// ---------------------------------------------------------------------------
// Results

void write_fit_result(const FitResult& result, const fs::path& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorKind::kIo, "cannot create " + out_dir.string() + ": " + ec.message());

  const auto& state = result.state;
  const std::size_t views = state.cols.size();

  {
    std::string text = "sample_index,cluster\n";
    for (std::size_t x = 0; x < state.rows.size(); ++x) {
      text += std::to_string(x) + "," + std::to_string(state.rows[x]) + "\n";
    }
    const auto path = out_dir / "row_assignments.csv";
    auto out = open_output(path);
    out << text;
    close_output(out, path);
  }
  for (std::size_t i = 0; i < views; ++i) {
    std::string text = "feature_index,cluster\n";
    for (std::size_t y = 0; y < state.cols[i].size(); ++y) {
      text += std::to_string(y) + "," + std::to_string(state.cols[i][y]) + "\n";
    }
    const auto path = out_dir / ("col_assignments_" + std::to_string(i) + ".csv");
    auto out = open_output(path);
    out << text;
    close_output(out, path);
  }
  {
    std::string text = "view_index,weight\n";
    for (std::size_t i = 0; i < views; ++i) {
      text += std::to_string(i) + "," + format_double(state.weights[i]) + "\n";
    }
    const auto path = out_dir / "weights.csv";
    auto out = open_output(path);
    out << text;
    close_output(out, path);
  }
  {
    std::string text = "iteration,J,weighted_loss";
    for (std::size_t i = 0; i < views; ++i) text += ",w_" + std::to_string(i + 1);
    text += "\n";
    for (const auto& entry : state.trace) {
      text += std::to_string(entry.iteration) + "," + format_double(entry.objective) + "," +
              format_double(entry.weighted_loss);
      for (const double w : entry.weights) text += "," + format_double(w);
      text += "\n";
    }
    const auto path = out_dir / "trajectory.csv";
    auto out = open_output(path);
    out << text;
    close_output(out, path);
  }

  ordered_json report;
  ordered_json config;
  config["k"] = result.config.k;
  config["l"] = result.config.l;
  config["lambda"] = result.config.lambda;
  config["epsilon"] = result.config.epsilon;
  config["max_iter"] = result.config.max_iter;
  config["seed"] = result.config.seed;
  config["restarts"] = result.config.restarts;
  config["alpha"] = result.config.alpha;
  report["config"] = config;
  report["objective"] = result.objective;
  report["iterations"] = result.iterations;
  report["converged"] = result.converged;
  report["best_restart"] = result.best_restart;
  report["best_restart_seed"] = result.best_restart_seed;
  report["weights"] = std::vector<double>(state.weights.values().begin(),
                                          state.weights.values().end());
  report["losses"] = state.losses;
  if (result.metrics) report["metrics"] = metrics_json(*result.metrics);
  write_json(report, out_dir / "report.json");
}

void write_metric_report(const MetricReport& report, const fs::path& path) {
  write_json(metrics_json(report), path);
}

void write_sweep(const std::vector<SweepRow>& rows, const fs::path& path) {
  const std::size_t views = rows.empty() ? 0 : rows.front().weights.size();
  const bool labeled = !rows.empty() && rows.front().metrics.has_value();
  std::string text = "lambda";
  for (std::size_t i = 0; i < views; ++i) text += ",w_" + std::to_string(i + 1);
  text += ",J";
  for (std::size_t i = 0; i < views; ++i) text += ",Q_" + std::to_string(i + 1);
  if (labeled) text += ",purity,nmi,rand_index";
  text += "\n";
  for (const auto& row : rows) {
    text += format_double(row.lambda);
    for (const double w : row.weights) text += "," + format_double(w);
    text += "," + format_double(row.objective);
    for (const double q : row.losses) text += "," + format_double(q);
    if (labeled && row.metrics) {
      text += "," + format_double(row.metrics->purity) + "," + format_double(row.metrics->nmi) +
              "," + format_double(row.metrics->rand_index);
    }
    text += "\n";
  }
  auto out = open_output(path);
  out << text;
  close_output(out, path);
}

}  // namespace mvitcc
