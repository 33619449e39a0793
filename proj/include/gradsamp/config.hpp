#pragma once

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "gradsamp/csv.hpp"
#include "gradsamp/errors.hpp"
#include "gradsamp/experiment.hpp"

namespace gradsamp {

namespace detail {

inline std::vector<std::string> split_list(std::string_view value) {
  std::vector<std::string> items;
  std::size_t start = 0;
  while (start <= value.size()) {
    const std::size_t comma = value.find(',', start);
    const std::string_view item = trim(
        comma == std::string_view::npos ? value.substr(start)
                                        : value.substr(start, comma - start));
    if (!item.empty()) items.emplace_back(item);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return items;
}

inline double config_double(const std::string& value, const std::string& key) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc{} || ptr != value.data() + value.size()) {
    throw std::invalid_argument("config: bad numeric value '" + value +
                                "' for key '" + key + "'");
  }
  return v;
}

inline long long config_int(const std::string& value, const std::string& key) {
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc{} || ptr != value.data() + value.size()) {
    throw std::invalid_argument("config: bad integer value '" + value +
                                "' for key '" + key + "'");
  }
  return v;
}

inline bool config_bool(const std::string& value, const std::string& key) {
  if (value == "true" || value == "on" || value == "1") return true;
  if (value == "false" || value == "off" || value == "0") return false;
  throw std::invalid_argument("config: bad boolean value '" + value +
                              "' for key '" + key + "'");
}

inline MixtureSpec mixture_preset(const std::string& name) {
  if (name == "GA" || name == "ga") return MixtureSpec::ga();
  if (name == "MG1" || name == "mg1") return MixtureSpec::mg1();
  if (name == "MG2" || name == "mg2") return MixtureSpec::mg2();
  if (name == "MG3" || name == "mg3") return MixtureSpec::mg3();
  throw std::invalid_argument("config: unknown preset '" + name + "'");
}

inline ProbMethod parse_method(const std::string& name) {
  if (name == "uniform") return ProbMethod::uniform;
  if (name == "leverage") return ProbMethod::leverage;
  if (name == "approx_leverage") return ProbMethod::approx_leverage;
  if (name == "gradient") return ProbMethod::gradient;
  if (name == "residual_oracle") return ProbMethod::residual_oracle;
  throw std::invalid_argument("config: unknown method '" + name + "'");
}

inline DrawScheme parse_scheme(const std::string& name) {
  if (name == "poisson") return DrawScheme::poisson;
  if (name == "replacement" || name == "with_replacement") {
    return DrawScheme::with_replacement;
  }
  throw std::invalid_argument("config: unknown draw scheme '" + name + "'");
}

inline Misspec parse_misspec(const std::string& name) {
  if (name == "none") return Misspec::none;
  if (name == "heteroscedastic" || name == "type1") return Misspec::heteroscedastic;
  if (name == "ar_errors" || name == "type2") return Misspec::ar_errors;
  if (name == "error_predictor_corr" || name == "type3") {
    return Misspec::error_predictor_corr;
  }
  throw std::invalid_argument("config: unknown misspec '" + name + "'");
}

}  // namespace detail

// Flat key = value format with '#' comments; list values are comma-separated.
// Unknown keys are rejected. See the README for the full schema and defaults.
inline ExperimentConfig parse_experiment_config_text(const std::string& text) {
  ExperimentConfig cfg;
  cfg.methods.clear();

  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string_view stripped = detail::trim(line);
    if (stripped.empty()) continue;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string_view::npos) {
      throw std::invalid_argument("config: expected key = value at line " +
                                  std::to_string(line_no));
    }
    const std::string key{detail::trim(stripped.substr(0, eq))};
    const std::string value{detail::trim(stripped.substr(eq + 1))};

    if (key == "dataset") {
      if (value == "synthetic") {
        cfg.synthetic = true;
      } else if (value == "csv") {
        cfg.synthetic = false;
      } else {
        throw std::invalid_argument("config: dataset must be synthetic or csv");
      }
    } else if (key == "preset") {
      cfg.synth.mixture = detail::mixture_preset(value);
    } else if (key == "mu") {
      cfg.synth.mixture.mu = detail::config_double(value, key);
    } else if (key == "theta_mg") {
      cfg.synth.mixture.theta_mg = detail::config_double(value, key);
    } else if (key == "sigma_x") {
      cfg.synth.mixture.sigma_x = detail::config_double(value, key);
    } else if (key == "n") {
      cfg.synth.n = static_cast<Eigen::Index>(detail::config_int(value, key));
    } else if (key == "d") {
      cfg.synth.d = static_cast<Eigen::Index>(detail::config_int(value, key));
    } else if (key == "sigma_eps") {
      cfg.synth.response.sigma_eps = detail::config_double(value, key);
    } else if (key == "misspec") {
      cfg.synth.response.misspec = detail::parse_misspec(value);
    } else if (key == "rho") {
      cfg.synth.response.rho = detail::config_double(value, key);
    } else if (key == "csv_path") {
      cfg.csv_path = value;
    } else if (key == "y_column") {
      cfg.y_column = value;
    } else if (key == "csv_header") {
      cfg.csv_header = detail::config_bool(value, key);
    } else if (key == "methods") {
      for (const std::string& item : detail::split_list(value)) {
        MethodChoice choice;
        const std::size_t colon = item.find(':');
        if (colon == std::string::npos) {
          choice.method = detail::parse_method(item);
        } else {
          choice.method = detail::parse_method(item.substr(0, colon));
          choice.scheme = detail::parse_scheme(item.substr(colon + 1));
        }
        cfg.methods.push_back(choice);
      }
    } else if (key == "r") {
      for (const std::string& item : detail::split_list(value)) {
        cfg.r_values.push_back(detail::config_double(item, key));
      }
    } else if (key == "r_ratio") {
      for (const std::string& item : detail::split_list(value)) {
        cfg.r_ratios.push_back(detail::config_double(item, key));
      }
    } else if (key == "r0_policy") {
      if (value == "fixed") {
        cfg.r0_policy = R0Policy::fixed;
      } else if (value == "fraction") {
        cfg.r0_policy = R0Policy::fraction;
      } else {
        throw std::invalid_argument("config: r0_policy must be fixed or fraction");
      }
    } else if (key == "r0") {
      cfg.r0_value = detail::config_double(value, key);
    } else if (key == "replications") {
      cfg.replications = static_cast<int>(detail::config_int(value, key));
    } else if (key == "seed") {
      cfg.master_seed = RngSeed{
          static_cast<std::uint64_t>(detail::config_int(value, key))};
    } else if (key == "delta") {
      cfg.delta = detail::config_double(value, key);
    } else if (key == "redistribute") {
      cfg.redistribute = detail::config_bool(value, key);
    } else if (key == "sketch_rows") {
      cfg.sketch_rows = static_cast<Eigen::Index>(detail::config_int(value, key));
    } else if (key == "threads") {
      cfg.threads = static_cast<int>(detail::config_int(value, key));
    } else if (key == "output") {
      cfg.output_path = value;
    } else if (key == "format") {
      if (value == "csv") {
        cfg.format = OutputFormat::csv;
      } else if (value == "json") {
        cfg.format = OutputFormat::json;
      } else {
        throw std::invalid_argument("config: format must be csv or json");
      }
    } else {
      throw std::invalid_argument("config: unknown key '" + key + "' at line " +
                                  std::to_string(line_no));
    }
  }

  if (cfg.methods.empty()) {
    cfg.methods = {{ProbMethod::uniform, DrawScheme::poisson},
                   {ProbMethod::leverage, DrawScheme::poisson},
                   {ProbMethod::gradient, DrawScheme::poisson}};
  }
  // The Type I hidden predictor follows the same law as the visible design.
  cfg.synth.response.hidden = cfg.synth.mixture;
  return cfg;
}

inline ExperimentConfig parse_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("config: cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_experiment_config_text(buffer.str());
}

}  // namespace gradsamp
