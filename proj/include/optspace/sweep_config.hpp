#pragma once

// Declarative sweep files (TOML):
//
//   trials = 5            # seeds per grid point: seed, seed + 1, ...
//   seed = 1
//   threads = 1
//
//   [grid]
//   m = [600]
//   n = [600]
//   r = [2]
//   e_over_n = [20, 40, 80, 160]   # or e_size = [...]
//   noise = ["gaussian"]           # none | gaussian | worst_sign | worst_constant
//   level = [1.0]                  # sigma, or Z_max for the worst case models
//   factor_scale = 0.0             # std of factor entries; 0 selects sqrt(20 / sqrt(n))
//
//   [optimizer]
//   rho = 0.0                      # or "n_epsilon"
//   mu0 = 0.0                      # 0 measures it on the starting point
//   max_iters = 500
//   grad_tol = 0.0                 # 0 selects the data-scaled default
//   f_rel_tol = 1e-10

#include <cmath>
#include <string>
#include <vector>

#include <toml.hpp>

#include "optspace/error.hpp"
#include "optspace/experiment.hpp"

namespace optspace::harness {

struct SweepConfig {
  std::vector<SweepPoint> points;
  long trials = 5;
  unsigned threads = 1;
};

namespace detail {

template <typename T>
std::vector<T> toml_list(const toml::table& table, std::string_view key, std::vector<T> fallback) {
  const auto* node = table.get(key);
  if (node == nullptr) return fallback;
  std::vector<T> out;
  const auto take = [&](const toml::node& item) {
    if constexpr (std::is_same_v<T, std::string>) {
      auto v = item.value<std::string>();
      if (!v) throw ParseError("sweep config: '" + std::string(key) + "' must hold strings");
      out.push_back(*v);
    } else {
      auto v = item.value<T>();
      if (!v) throw ParseError("sweep config: '" + std::string(key) + "' must hold numbers");
      out.push_back(*v);
    }
  };
  if (const auto* arr = node->as_array()) {
    for (const auto& item : *arr) take(item);
  } else {
    take(*node);
  }
  if (out.empty()) throw ParseError("sweep config: '" + std::string(key) + "' is empty");
  return out;
}

}  // namespace detail

inline OptConfig parse_optimizer(const toml::table* table) {
  OptConfig cfg;
  if (table == nullptr) return cfg;
  const auto& t = *table;
  if (const auto* rho = t.get("rho")) {
    if (auto s = rho->value<std::string>()) {
      if (*s != "n_epsilon") throw ParseError("sweep config: rho must be a number or \"n_epsilon\"");
      cfg.rho_n_epsilon = true;
    } else if (auto v = rho->value<double>()) {
      cfg.rho = *v;
    } else {
      throw ParseError("sweep config: bad rho");
    }
  }
  if (auto v = t["mu0"].value<double>(); v && *v > 0.0) cfg.mu0 = *v;
  if (auto v = t["max_iters"].value<long>()) cfg.max_iters = *v;
  if (auto v = t["grad_tol"].value<double>()) cfg.grad_tol = *v;
  if (auto v = t["f_rel_tol"].value<double>()) cfg.f_rel_tol = *v;
  if (auto v = t["svd_tol"].value<double>()) cfg.svd_tol = *v;
  cfg.validate();
  return cfg;
}

inline SweepConfig parse_sweep(const toml::table& root) {
  SweepConfig out;
  out.trials = root["trials"].value_or(5L);
  const auto seed = root["seed"].value_or(std::int64_t{1});
  out.threads = static_cast<unsigned>(root["threads"].value_or(1L));
  if (out.trials < 1) throw ParseError("sweep config: trials must be >= 1");

  const auto* grid = root["grid"].as_table();
  if (grid == nullptr) throw ParseError("sweep config: missing [grid] table");
  const OptConfig cfg = parse_optimizer(root["optimizer"].as_table());

  const auto ms = detail::toml_list<std::int64_t>(*grid, "m", {});
  const auto ns = detail::toml_list<std::int64_t>(*grid, "n", {});
  const auto rs = detail::toml_list<std::int64_t>(*grid, "r", {});
  const bool by_ratio = grid->contains("e_over_n");
  if (by_ratio == grid->contains("e_size")) throw ParseError("sweep config: give exactly one of e_over_n, e_size");
  const auto sizes = detail::toml_list<double>(*grid, by_ratio ? "e_over_n" : "e_size", {});
  const auto noises = detail::toml_list<std::string>(*grid, "noise", {"none"});
  const auto levels = detail::toml_list<double>(*grid, "level", {0.0});
  const double scale = (*grid)["factor_scale"].value_or(0.0);

  for (auto m : ms)
    for (auto n : ns)
      for (auto r : rs)
        for (double size : sizes)
          for (const auto& noise : noises) {
            const std::vector<double> lv = noise == "none" ? std::vector<double>{0.0} : levels;
            for (double level : lv) {
              SweepPoint p;
              p.spec.m = m;
              p.spec.n = n;
              p.spec.r = r;
              const Index small = std::min<Index>(m, n);
              p.spec.e_size = by_ratio ? static_cast<Index>(std::llround(size * static_cast<double>(small)))
                                       : static_cast<Index>(std::llround(size));
              p.spec.factor_scale = scale > 0.0 ? scale : benchmark_factor_scale(small);
              p.spec.noise = make_noise(noise, level);
              p.spec.seed = static_cast<std::uint64_t>(seed);
              p.spec.validate();
              p.config = cfg;
              out.points.push_back(std::move(p));
            }
          }
  return out;
}

inline SweepConfig load_sweep(const std::string& path) {
  try {
    return parse_sweep(toml::parse_file(path));
  } catch (const toml::parse_error& e) {
    throw ParseError("sweep config '" + path + "': " + std::string(e.description()));
  }
}

inline SweepConfig parse_sweep_string(std::string_view text) {
  try {
    return parse_sweep(toml::parse(text));
  } catch (const toml::parse_error& e) {
    throw ParseError("sweep config: " + std::string(e.description()));
  }
}

}  // namespace optspace::harness
