#ifndef ENTYPER_CONFIG_HPP_
#define ENTYPER_CONFIG_HPP_

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "entyper/error.hpp"
#include "entyper/text.hpp"
#include "entyper/type_inference.hpp"

namespace entyper {

/// Environment variable naming the default config file.
inline constexpr const char* kConfigEnvVar = "ENTYPER_CONFIG";

/// Everything a CLI run needs. Unset paths stay empty.
struct RunConfig {
  std::filesystem::path corpus;
  std::filesystem::path concept_types;
  std::filesystem::path typedefs;
  std::filesystem::path vectors;        // corpus sentence vectors (encoder=vectors)
  std::filesystem::path query_vectors;  // query vectors (encoder=vectors)
  std::filesystem::path index;
  std::filesystem::path priors;
  std::filesystem::path reps;
  std::string encoder = "fallback";
  std::size_t dim = 256;
  InferenceParams params;
  std::optional<std::string> fallback;  // unset: taxonomy default
};

namespace detail {

inline std::string unquote(std::string_view v) {
  v = trim_view(v);
  if (v.size() >= 2 && (v.front() == '"' || v.front() == '\'') && v.back() == v.front()) {
    return std::string(v.substr(1, v.size() - 2));
  }
  return std::string(v);
}

inline double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    double d = std::stod(v, &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw ValidationError("config key '" + key + "': not a number: " + v);
}

inline std::size_t to_count(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    auto n = std::stoull(v, &used);
    if (used == v.size()) return static_cast<std::size_t>(n);
  } catch (const std::exception&) {
  }
  throw ValidationError("config key '" + key + "': not a count: " + v);
}

}  // namespace detail

/// Parses "key = value" lines. '#' starts a comment, "[section]" headers are
/// ignored, values may be quoted. Relative paths resolve against `base_dir`.
inline std::map<std::string, std::string> parse_key_values(std::string_view text) {
  std::map<std::string, std::string> kv;
  std::size_t line_no = 0;
  for (auto raw : split_view(text, '\n')) {
    ++line_no;
    auto line = trim_view(raw);
    if (line.empty() || line.front() == '#' || line.front() == '[') continue;
    auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected key = value", line_no);
    auto key = std::string(trim_view(line.substr(0, eq)));
    auto value = line.substr(eq + 1);
    if (auto hash = value.find(" #"); hash != std::string_view::npos) value = value.substr(0, hash);
    if (key.empty()) throw ParseError("empty key", line_no);
    kv[key] = detail::unquote(value);
  }
  return kv;
}

inline void apply_key_values(RunConfig& cfg, const std::map<std::string, std::string>& kv,
                             const std::filesystem::path& base_dir) {
  auto path = [&](const std::string& v) {
    std::filesystem::path p(v);
    return p.is_relative() && !base_dir.empty() ? base_dir / p : p;
  };
  for (const auto& [key, value] : kv) {
    if (key == "corpus") cfg.corpus = path(value);
    else if (key == "concept_types") cfg.concept_types = path(value);
    else if (key == "typedefs") cfg.typedefs = path(value);
    else if (key == "vectors") cfg.vectors = path(value);
    else if (key == "query_vectors") cfg.query_vectors = path(value);
    else if (key == "index") cfg.index = path(value);
    else if (key == "priors") cfg.priors = path(value);
    else if (key == "reps") cfg.reps = path(value);
    else if (key == "encoder") cfg.encoder = value;
    else if (key == "dim") cfg.dim = detail::to_count(key, value);
    else if (key == "lambda") cfg.params.lambda = detail::to_double(key, value);
    else if (key == "eta_s") cfg.params.eta_s = detail::to_double(key, value);
    else if (key == "eta_c") cfg.params.eta_c = detail::to_double(key, value);
    else if (key == "ell_esa") cfg.params.ell_esa = detail::to_count(key, value);
    else if (key == "ell_elmo") cfg.params.ell_elmo = detail::to_count(key, value);
    else if (key == "fallback") cfg.fallback = value;
    else throw ValidationError("unknown config key '" + key + "'");
  }
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open config '" + path.string() + "'");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  RunConfig cfg;
  apply_key_values(cfg, parse_key_values(text), path.parent_path());
  return cfg;
}

/// Throws ValidationError naming `what` when `p` is unset or missing.
inline void require_path(const std::filesystem::path& p, std::string_view what) {
  if (p.empty()) throw ValidationError("missing " + std::string(what) + " path");
  if (!std::filesystem::exists(p)) {
    throw ValidationError(std::string(what) + " path does not exist: " + p.string());
  }
}

}  // namespace entyper

#endif  // ENTYPER_CONFIG_HPP_
