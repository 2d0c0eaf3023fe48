#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "hula/mnp.hpp"
#include "hula/rng.hpp"

namespace hula::io {

using json = nlohmann::json;

/// Configuration problems the CLI maps to the usage/config exit code.
struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Shortest representation that round-trips a double exactly.
inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

/// Writes via a temp file plus rename so readers never observe a partial
/// file.
inline void atomic_write_text(const std::filesystem::path& path,
                              const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    if (!out.flush()) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline json load_json(const std::filesystem::path& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw config_error(path.string() + ": " + e.what());
  }
}

/// Rejects unknown keys so typos fail loudly instead of being ignored.
inline void require_known_keys(const json& obj,
                               const std::vector<std::string>& allowed,
                               const std::string& context) {
  if (!obj.is_object()) throw config_error(context + ": expected a JSON object");
  for (const auto& item : obj.items()) {
    bool ok = false;
    for (const auto& key : allowed)
      if (item.key() == key) {
        ok = true;
        break;
      }
    if (!ok) throw config_error(context + ": unknown key \"" + item.key() + "\"");
  }
}

template <typename T>
T get_required(const json& obj, const std::string& key, const std::string& context) {
  if (!obj.contains(key))
    throw config_error(context + ": missing required key \"" + key + "\"");
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw config_error(context + ": bad value for \"" + key + "\"");
  }
}

template <typename T>
T get_optional(const json& obj, const std::string& key, T fallback,
               const std::string& context) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw config_error(context + ": bad value for \"" + key + "\"");
  }
}

/// 64-bit FNV-1a. Applied to the canonical (sorted-key) JSON dump, it gives a
/// config hash that is stable under key reordering in the source file.
inline std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= static_cast<std::uint64_t>(c);
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string config_hash(const json& config) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a(config.dump())));
  return buf;
}

inline std::string iso_timestamp_utc() {
  const std::time_t now = std::time(nullptr);
  std::tm tm_utc{};
  gmtime_r(&now, &tm_utc);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

// ---------------------------------------------------------------------------
// CSV helpers

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

inline double parse_double(const std::string& s, const std::string& context) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0')
    throw config_error(context + ": bad number \"" + s + "\"");
  return v;
}

inline long parse_long(const std::string& s, const std::string& context) {
  char* end = nullptr;
  const long v = std::strtol(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0')
    throw config_error(context + ": bad integer \"" + s + "\"");
  return v;
}

inline std::vector<std::vector<std::string>> read_csv(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    rows.push_back(split_csv_line(line));
  }
  if (rows.empty()) throw config_error(path.string() + ": empty file");
  return rows;
}

// ---------------------------------------------------------------------------
// Dataset files. choices.csv: (obs_id, y). attributes.csv: one row per
// (observation, alternative): (obs_id, alternative, x_1..x_r), alternatives
// 1-based. oracle.csv: (obs_id, y) with real-valued y.

inline void write_choice_dataset(const std::filesystem::path& dir,
                                 const ChoiceDataset& data) {
  std::ostringstream choices;
  choices << "obs_id,y\n";
  for (int i = 0; i < data.n_obs(); ++i) choices << i << ',' << data.y(i) << '\n';
  atomic_write_text(dir / "choices.csv", choices.str());

  const int J = static_cast<int>(data.X.at(0).rows());
  const int r = static_cast<int>(data.X.at(0).cols());
  std::ostringstream attrs;
  attrs << "obs_id,alternative";
  for (int k = 1; k <= r; ++k) attrs << ",x_" << k;
  attrs << '\n';
  for (int i = 0; i < data.n_obs(); ++i)
    for (int j = 0; j < J; ++j) {
      attrs << i << ',' << (j + 1);
      for (int k = 0; k < r; ++k)
        attrs << ',' << format_double(data.X[static_cast<std::size_t>(i)](j, k));
      attrs << '\n';
    }
  atomic_write_text(dir / "attributes.csv", attrs.str());
}

inline ChoiceDataset read_choice_dataset(const std::filesystem::path& dir) {
  const auto choice_rows = read_csv(dir / "choices.csv");
  if (choice_rows.front().size() != 2 || choice_rows.front()[0] != "obs_id")
    throw config_error("choices.csv: unexpected header");
  const int n = static_cast<int>(choice_rows.size()) - 1;
  if (n < 1) throw config_error("choices.csv: no observations");

  const auto attr_rows = read_csv(dir / "attributes.csv");
  const auto& header = attr_rows.front();
  if (header.size() < 3 || header[0] != "obs_id" || header[1] != "alternative")
    throw config_error("attributes.csv: unexpected header");
  const int r = static_cast<int>(header.size()) - 2;
  const int total = static_cast<int>(attr_rows.size()) - 1;
  if (total % n != 0)
    throw config_error("attributes.csv: row count not a multiple of n");
  const int J = total / n;

  ChoiceDataset data;
  data.y.resize(n);
  for (int i = 0; i < n; ++i) {
    const auto& row = choice_rows[static_cast<std::size_t>(i) + 1];
    if (row.size() != 2) throw config_error("choices.csv: bad row");
    if (parse_long(row[0], "choices.csv") != i)
      throw config_error("choices.csv: obs_id out of order");
    data.y(i) = static_cast<int>(parse_long(row[1], "choices.csv"));
  }
  data.X.assign(static_cast<std::size_t>(n), Eigen::MatrixXd::Zero(J, r));
  for (int t = 0; t < total; ++t) {
    const auto& row = attr_rows[static_cast<std::size_t>(t) + 1];
    if (static_cast<int>(row.size()) != r + 2)
      throw config_error("attributes.csv: bad row width");
    const long i = parse_long(row[0], "attributes.csv");
    const long j = parse_long(row[1], "attributes.csv");
    if (i < 0 || i >= n || j < 1 || j > J)
      throw config_error("attributes.csv: index out of range");
    for (int k = 0; k < r; ++k)
      data.X[static_cast<std::size_t>(i)](j - 1, k) =
          parse_double(row[static_cast<std::size_t>(k) + 2], "attributes.csv");
  }
  return data;
}

inline void write_oracle_data(const std::filesystem::path& dir,
                              const Eigen::VectorXd& y) {
  std::ostringstream out;
  out << "obs_id,y\n";
  for (Eigen::Index i = 0; i < y.size(); ++i)
    out << i << ',' << format_double(y(i)) << '\n';
  atomic_write_text(dir / "oracle.csv", out.str());
}

inline Eigen::VectorXd read_oracle_data(const std::filesystem::path& dir) {
  const auto rows = read_csv(dir / "oracle.csv");
  if (rows.front().size() != 2 || rows.front()[0] != "obs_id")
    throw config_error("oracle.csv: unexpected header");
  Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()) - 1);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() != 2) throw config_error("oracle.csv: bad row");
    y(static_cast<Eigen::Index>(i) - 1) = parse_double(rows[i][1], "oracle.csv");
  }
  return y;
}

// ---------------------------------------------------------------------------
// Draws files: headered CSV, one column per parameter, one row per retained
// iteration.

inline std::vector<std::string> mnp_parameter_names(const MnpSpec& spec) {
  std::vector<std::string> names;
  for (int k = 1; k <= spec.n_regressors; ++k)
    names.push_back("beta_" + std::to_string(k));
  for (int k = 1; k <= spec.angle_dim(); ++k)
    names.push_back("kappa_" + std::to_string(k));
  return names;
}

inline void write_draws_csv(const std::filesystem::path& path,
                            const Eigen::MatrixXd& draws,
                            const std::vector<std::string>& names) {
  if (static_cast<Eigen::Index>(names.size()) != draws.cols())
    throw std::invalid_argument("write_draws_csv: name/column mismatch");
  std::ostringstream out;
  for (std::size_t k = 0; k < names.size(); ++k)
    out << (k ? "," : "") << names[k];
  out << '\n';
  for (Eigen::Index i = 0; i < draws.rows(); ++i) {
    for (Eigen::Index c = 0; c < draws.cols(); ++c)
      out << (c ? "," : "") << format_double(draws(i, c));
    out << '\n';
  }
  atomic_write_text(path, out.str());
}

struct DrawsFile {
  Eigen::MatrixXd draws;
  std::vector<std::string> names;
};

inline DrawsFile read_draws_csv(const std::filesystem::path& path) {
  const auto rows = read_csv(path);
  DrawsFile out;
  out.names = rows.front();
  const Eigen::Index cols = static_cast<Eigen::Index>(out.names.size());
  out.draws.resize(static_cast<Eigen::Index>(rows.size()) - 1, cols);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (static_cast<Eigen::Index>(rows[i].size()) != cols)
      throw config_error(path.string() + ": ragged row");
    for (Eigen::Index c = 0; c < cols; ++c)
      out.draws(static_cast<Eigen::Index>(i) - 1, c) =
          parse_double(rows[i][static_cast<std::size_t>(c)], path.string());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Train/test split: uniform random by observation, reproducible from
// (fraction, seed).

struct Split {
  std::vector<int> train;
  std::vector<int> test;
};

inline Split train_test_split(int n, double train_fraction, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("train_test_split: n < 1");
  if (!(train_fraction > 0.0) || train_fraction > 1.0)
    throw std::invalid_argument("train_test_split: fraction outside (0, 1]");
  const int m = std::max(1, static_cast<int>(std::llround(train_fraction * n)));
  Split split;
  if (m >= n) {
    split.train.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) split.train[static_cast<std::size_t>(i)] = i;
    return split;
  }
  RngStream rng(seed, StreamPurpose::split);
  split.train = sample_index_subset(n, m, rng);
  split.test.reserve(static_cast<std::size_t>(n - m));
  std::size_t pos = 0;
  for (int i = 0; i < n; ++i) {
    if (pos < split.train.size() && split.train[pos] == i) {
      ++pos;
      continue;
    }
    split.test.push_back(i);
  }
  return split;
}

inline ChoiceDataset dataset_subset(const ChoiceDataset& data,
                                    const std::vector<int>& indices) {
  ChoiceDataset out;
  out.y.resize(static_cast<Eigen::Index>(indices.size()));
  out.X.reserve(indices.size());
  for (std::size_t k = 0; k < indices.size(); ++k) {
    out.y(static_cast<Eigen::Index>(k)) = data.y(indices[k]);
    out.X.push_back(data.X[static_cast<std::size_t>(indices[k])]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Run manifest: what ran, from which config, producing which files, with
// contiguous per-stage wall times that sum to the total.

struct RunManifest {
  std::string command;
  std::string sampler;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::string started_at;
  std::string finished_at;
  double load_seconds = 0.0;
  double sample_seconds = 0.0;
  double write_seconds = 0.0;
  double total_seconds = 0.0;
  std::int64_t iterations = 0;
  std::int64_t burn_in = 0;
  int threads = 1;
  std::vector<std::string> outputs;
  std::string note;

  json to_json() const {
    json j;
    j["command"] = command;
    if (!sampler.empty()) j["sampler"] = sampler;
    j["seed"] = seed;
    j["config_hash"] = config_hash;
    j["started_at"] = started_at;
    j["finished_at"] = finished_at;
    j["stage_seconds"] = {{"load", load_seconds},
                          {"sample", sample_seconds},
                          {"write", write_seconds}};
    j["total_seconds"] = total_seconds;
    if (iterations > 0) j["iterations"] = iterations;
    if (iterations > 0) j["burn_in"] = burn_in;
    j["threads"] = threads;
    j["outputs"] = outputs;
    if (!note.empty()) j["note"] = note;
    return j;
  }
};

inline void write_manifest(const std::filesystem::path& path,
                           const RunManifest& manifest) {
  atomic_write_text(path, manifest.to_json().dump(2) + "\n");
}

}  // namespace hula::io
