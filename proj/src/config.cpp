#include "lsgm/config.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <variant>

namespace lsgm {

namespace {

using Field = std::variant<std::string ExperimentConfig::*, int ExperimentConfig::*, double ExperimentConfig::*,
                           bool ExperimentConfig::*, std::uint64_t ExperimentConfig::*>;

const std::vector<std::pair<std::string, Field>>& fields() {
  using C = ExperimentConfig;
  static const std::vector<std::pair<std::string, Field>> table = {
      {"dataset_root", &C::dataset_root},
      {"classes", &C::classes},
      {"train_per_class", &C::train_per_class},
      {"test_per_class", &C::test_per_class},
      {"seed", &C::seed},
      {"workers", &C::workers},
      {"image_width", &C::image_width},
      {"image_height", &C::image_height},
      {"layout", &C::layout},
      {"graph_layout", &C::graph_layout},
      {"dm", &C::dm},
      {"dn", &C::dn},
      {"epsilon", &C::epsilon},
      {"max_sparsity", &C::max_sparsity},
      {"global_max_sparsity", &C::global_max_sparsity},
      {"error_atoms", &C::error_atoms},
      {"error_sparsity", &C::error_sparsity},
      {"angle_min", &C::angle_min},
      {"angle_max", &C::angle_max},
      {"scale_x", &C::scale_x},
      {"scale_y", &C::scale_y},
      {"translate_x", &C::translate_x},
      {"translate_y", &C::translate_y},
      {"corruption", &C::corruption},
      {"pipeline", &C::pipeline},
      {"rounds", &C::rounds},
      {"node_cap", &C::node_cap},
      {"complement_per_class", &C::complement_per_class},
      {"variance_ridge", &C::variance_ridge},
      {"feature_pooling", &C::feature_pooling},
      {"outlier_classes", &C::outlier_classes},
      {"outlier_tests", &C::outlier_tests},
      {"svm_c", &C::svm_c},
      {"svm_gamma", &C::svm_gamma},
      {"svm_tol", &C::svm_tol},
      {"sweep_counts", &C::sweep_counts},
      {"out_dir", &C::out_dir},
      {"cache_dir", &C::cache_dir},
      {"fixture_classes", &C::fixture_classes},
      {"fixture_samples", &C::fixture_samples},
      {"fixture_width", &C::fixture_width},
      {"fixture_height", &C::fixture_height},
      {"fixture_texture", &C::fixture_texture},
      {"fixture_jitter", &C::fixture_jitter},
      {"fixture_lighting", &C::fixture_lighting},
      {"fixture_noise", &C::fixture_noise},
      {"fixture_expression", &C::fixture_expression},
  };
  return table;
}

const Field& lookup(const std::string& key) {
  for (const auto& [name, f] : fields())
    if (name == key) return f;
  throw ConfigError("unknown config key '" + key + "'");
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  // Prefer the shortest representation that round-trips.
  for (int prec = 1; prec <= 17; ++prec) {
    char shorter[64];
    std::snprintf(shorter, sizeof shorter, "%.*g", prec, v);
    if (std::strtod(shorter, nullptr) == v) return shorter;
  }
  return buf;
}

}  // namespace

std::vector<std::string> ExperimentConfig::pipelines() const {
  std::vector<std::string> out;
  std::stringstream ss(pipeline);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void ExperimentConfig::set(const std::string& key, const std::string& raw) {
  const std::string value = trim(raw);
  const Field& f = lookup(key);
  auto fail = [&] { return ConfigError("bad value '" + value + "' for config key '" + key + "'"); };
  std::visit(
      [&](auto member) {
        using T = std::remove_reference_t<decltype(this->*member)>;
        if constexpr (std::is_same_v<T, std::string>) {
          this->*member = value;
        } else if constexpr (std::is_same_v<T, bool>) {
          if (value == "true" || value == "1" || value == "yes") this->*member = true;
          else if (value == "false" || value == "0" || value == "no") this->*member = false;
          else throw fail();
        } else {
          std::size_t used = 0;
          try {
            if constexpr (std::is_same_v<T, int>) this->*member = std::stoi(value, &used);
            else if constexpr (std::is_same_v<T, double>) this->*member = std::stod(value, &used);
            else this->*member = std::stoull(value, &used);
          } catch (const std::logic_error&) {
            throw fail();
          }
          if (used != value.size()) throw fail();
        }
      },
      f);
}

std::string ExperimentConfig::get(const std::string& key) const {
  const Field& f = lookup(key);
  return std::visit(
      [&](auto member) -> std::string {
        using T = std::remove_cvref_t<decltype(this->*member)>;
        if constexpr (std::is_same_v<T, std::string>) return this->*member;
        else if constexpr (std::is_same_v<T, bool>) return (this->*member) ? "true" : "false";
        else if constexpr (std::is_same_v<T, double>) return format_real(this->*member);
        else return std::to_string(this->*member);
      },
      f);
}

const std::vector<std::string>& ExperimentConfig::keys() {
  static const std::vector<std::string> k = [] {
    std::vector<std::string> out;
    for (const auto& [name, f] : fields()) out.push_back(name);
    return out;
  }();
  return k;
}

void ExperimentConfig::merge_text(const std::string& text) {
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    set(trim(line.substr(0, eq)), line.substr(eq + 1));
  }
}

void ExperimentConfig::merge_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  merge_text(ss.str());
}

std::string ExperimentConfig::echo() const {
  std::string out;
  for (const auto& key : keys()) out += key + " = " + get(key) + "\n";
  return out;
}

void ExperimentConfig::validate() const {
  auto need = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("invalid config: " + what);
  };
  need(classes >= 0, "classes must be >= 0");
  need(train_per_class >= 1, "train_per_class must be positive");
  need(test_per_class >= 0, "test_per_class must be >= 0");
  need(workers >= 1, "workers must be positive");
  need(dm >= 0 && dn >= 0, "search window must be non-negative");
  need(epsilon >= 0, "epsilon must be non-negative");
  need(max_sparsity >= 1 && global_max_sparsity >= 1, "sparsity levels must be positive");
  need(error_sparsity >= 0, "error_sparsity must be non-negative");
  need(angle_min <= angle_max, "angle_min must not exceed angle_max");
  need(scale_x > 0 && scale_y > 0, "scale factors must be positive");
  need(corruption >= 0 && corruption <= 1, "corruption must lie in [0,1]");
  need(rounds >= 1, "rounds must be positive");
  need(node_cap >= 1, "node_cap must be positive");
  need(complement_per_class >= 1, "complement_per_class must be positive");
  need(image_width >= 0 && image_height >= 0 && (image_width == 0) == (image_height == 0),
       "image_width and image_height must both be zero or both positive");
  need(feature_pooling == "atom" || feature_pooling == "image", "feature_pooling must be atom or image");
  need(variance_ridge > 0, "variance_ridge must be positive");
  need(outlier_classes >= 0 && outlier_tests >= 0, "outlier counts must be >= 0");
  need(svm_c > 0 && svm_gamma >= 0 && svm_tol > 0, "svm hyperparameters out of range");
  need(fixture_classes >= 1 && fixture_samples >= 1 && fixture_width >= 1 && fixture_height >= 1,
       "fixture dimensions must be positive");
  need(fixture_texture >= 0 && fixture_jitter >= 0 && fixture_lighting >= 0 && fixture_noise >= 0 &&
           fixture_expression >= 0,
       "fixture amplitudes must be non-negative");
  const auto p = pipelines();
  need(!p.empty(), "no pipeline selected");
  for (const auto& name : p)
    need(name == "src" || name == "voting" || name == "lhml" || name == "lsgm" || name == "meta",
         "unknown pipeline '" + name + "'");
}

}  // namespace lsgm
