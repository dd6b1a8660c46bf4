#pragma once

// Instance and report serialization. Instances are JSON documents with an
// explicit "kind"; doubles survive a round trip bit-exactly (shortest
// round-trip encoding on write). CSV output carries "# key=value" metadata
// lines; the generated_at line is a timestamp and excluded from determinism
// comparisons by readers.

#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "mixattack/core.hpp"
#include "mixattack/diff.hpp"
#include "mixattack/oracle.hpp"

namespace mixattack {

struct BinaryInstance {
  Mixture<LinearClassifier> mixture;
  LabeledPoint point;
};

struct MulticlassInstance {
  Mixture<SoftmaxLinearClassifier> mixture;
  LabeledPoint point;
};

using LoadedInstance = std::variant<BinaryInstance, MulticlassInstance>;

namespace detail {

inline nlohmann::json vec_to_json(const Vec& v) {
  nlohmann::json a = nlohmann::json::array();
  for (long i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

inline Vec vec_from_json(const nlohmann::json& a, const char* what) {
  if (!a.is_array())
    throw ContractViolation(std::string(what) + ": expected an array");
  Vec v(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!a[i].is_number())
      throw ContractViolation(std::string(what) + ": expected numbers");
    v[i] = a[i].get<double>();
  }
  return v;
}

inline Eigen::MatrixXd mat_from_json(const nlohmann::json& a,
                                     const char* what) {
  if (!a.is_array() || a.empty())
    throw ContractViolation(std::string(what) + ": expected a 2d array");
  Vec first = vec_from_json(a[0], what);
  Eigen::MatrixXd m(a.size(), first.size());
  m.row(0) = first.transpose();
  for (std::size_t r = 1; r < a.size(); ++r) {
    Vec row = vec_from_json(a[r], what);
    if (row.size() != m.cols())
      throw ContractViolation(std::string(what) + ": ragged rows");
    m.row(r) = row.transpose();
  }
  return m;
}

inline nlohmann::json mat_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json a = nlohmann::json::array();
  for (long r = 0; r < m.rows(); ++r)
    a.push_back(vec_to_json(m.row(r).transpose()));
  return a;
}

}  // namespace detail

inline nlohmann::json serialize_instance(const Mixture<LinearClassifier>& mix,
                                         const LabeledPoint& point) {
  nlohmann::json j;
  j["kind"] = "linear";
  j["d"] = mix.dim();
  j["k"] = 2;
  nlohmann::json cs = nlohmann::json::array();
  for (const auto& h : mix.classifiers)
    cs.push_back({{"theta", detail::vec_to_json(h.theta)}, {"bias", h.bias}});
  j["classifiers"] = std::move(cs);
  j["weights"] = detail::vec_to_json(mix.weights);
  j["point"] = {{"x", detail::vec_to_json(point.x)}, {"y", point.label}};
  return j;
}

inline nlohmann::json serialize_instance(
    const Mixture<SoftmaxLinearClassifier>& mix, const LabeledPoint& point) {
  nlohmann::json j;
  j["kind"] = "softmax_linear";
  j["d"] = mix.dim();
  j["k"] = mix.classifiers.front().num_classes();
  nlohmann::json cs = nlohmann::json::array();
  for (const auto& h : mix.classifiers)
    cs.push_back({{"W", detail::mat_to_json(h.W)},
                  {"c", detail::vec_to_json(h.c)}});
  j["classifiers"] = std::move(cs);
  j["weights"] = detail::vec_to_json(mix.weights);
  j["point"] = {{"x", detail::vec_to_json(point.x)}, {"y", point.label}};
  return j;
}

inline LoadedInstance parse_instance(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("kind"))
    throw ContractViolation("instance: missing kind");
  std::string kind = j.at("kind").get<std::string>();
  if (!j.contains("classifiers") || !j.at("classifiers").is_array() ||
      j.at("classifiers").empty())
    throw ContractViolation("instance: missing classifiers");
  if (!j.contains("weights") || !j.contains("point"))
    throw ContractViolation("instance: missing weights or point");
  Vec weights = detail::vec_from_json(j.at("weights"), "weights");
  const nlohmann::json& pt = j.at("point");
  if (!pt.contains("x") || !pt.contains("y"))
    throw ContractViolation("instance: point needs x and y");
  LabeledPoint point{detail::vec_from_json(pt.at("x"), "point.x"),
                     pt.at("y").get<int>()};

  if (kind == "linear") {
    std::vector<LinearClassifier> cs;
    for (const auto& c : j.at("classifiers"))
      cs.emplace_back(detail::vec_from_json(c.at("theta"), "theta"),
                      c.at("bias").get<double>());
    return BinaryInstance{
        Mixture<LinearClassifier>(std::move(cs), std::move(weights)), point};
  }
  if (kind == "softmax_linear") {
    std::vector<SoftmaxLinearClassifier> cs;
    for (const auto& c : j.at("classifiers"))
      cs.emplace_back(detail::mat_from_json(c.at("W"), "W"),
                      detail::vec_from_json(c.at("c"), "c"));
    return MulticlassInstance{
        Mixture<SoftmaxLinearClassifier>(std::move(cs), std::move(weights)),
        point};
  }
  throw ContractViolation("instance: unknown kind '" + kind + "'");
}

inline void write_text_file(const std::string& path,
                            const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ContractViolation("cannot open: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

template <class C>
void save_instance(const std::string& path, const Mixture<C>& mix,
                   const LabeledPoint& point) {
  write_text_file(path, serialize_instance(mix, point).dump(2) + "\n");
}

inline LoadedInstance load_instance(const std::string& path) {
  std::string text = read_text_file(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ContractViolation("parse error in " + path + ": " + e.what());
  }
  try {
    return parse_instance(j);
  } catch (const nlohmann::json::exception& e) {
    throw ContractViolation("bad instance in " + path + ": " + e.what());
  }
}

inline nlohmann::json report_to_json(const LatticeReport& rep) {
  char fp[32];
  std::snprintf(fp, sizeof fp, "%016llx",
                static_cast<unsigned long long>(rep.fingerprint));
  nlohmann::json j;
  j["m"] = rep.m;
  j["norm"] = norm_name(rep.budget.norm);
  j["epsilon"] = rep.budget.epsilon;
  j["fingerprint"] = fp;
  j["oracle_grade"] = rep.oracle_grade;
  j["optimal_score"] = rep.optimal_score;
  if (rep.optimal_witness)
    j["optimal_witness"] = detail::vec_to_json(*rep.optimal_witness);
  nlohmann::json maximal = nlohmann::json::array();
  for (IndexSet s : rep.maximal_regions) maximal.push_back(s.to_indices());
  j["maximal_regions"] = std::move(maximal);
  nlohmann::json statuses = nlohmann::json::array();
  for (const RegionStatus& st : rep.statuses) {
    nlohmann::json e;
    e["indices"] = st.indices.to_indices();
    e["feasible"] = st.feasible;
    if (st.witness) e["witness"] = detail::vec_to_json(*st.witness);
    statuses.push_back(std::move(e));
  }
  j["statuses"] = std::move(statuses);
  return j;
}

// %.17g: enough digits that reading the text back recovers the exact double.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct CsvTable {
  std::vector<std::pair<std::string, std::string>> meta;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

inline std::string csv_to_string(const CsvTable& table,
                                 bool with_timestamp = true) {
  std::ostringstream out;
  if (with_timestamp) {
    std::time_t now = std::time(nullptr);
    char buf[64];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    out << "# generated_at=" << buf << "\n";
  }
  for (const auto& [k, v] : table.meta) out << "# " << k << "=" << v << "\n";
  for (std::size_t i = 0; i < table.header.size(); ++i)
    out << (i ? "," : "") << table.header[i];
  out << "\n";
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i)
      out << (i ? "," : "") << row[i];
    out << "\n";
  }
  return out.str();
}

inline void write_csv(const std::string& path, const CsvTable& table) {
  write_text_file(path, csv_to_string(table));
}

// Contents with timestamp lines dropped, for determinism comparisons.
inline std::string strip_timestamp_lines(const std::string& text) {
  std::istringstream in(text);
  std::ostringstream out;
  std::string line;
  while (std::getline(in, line))
    if (line.rfind("# generated_at=", 0) != 0) out << line << "\n";
  return out.str();
}

}  // namespace mixattack
