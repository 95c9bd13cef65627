#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "qlqg/io.hpp"

namespace qlqg::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitNumerical = 3;

struct Options {
  std::string scenario;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  bool dual = false;
  std::optional<long long> n_traj;
};

/// Output directory: --out, else the scenario's "out", else "qlqg-out".
std::string output_dir(const Options& opts, const Scenario* scenario);

int cmd_build(const Options& opts, std::ostream& out);
int cmd_riccati(const Options& opts, std::ostream& out);
int cmd_simulate(const Options& opts, std::ostream& out);
int cmd_sme(const Options& opts, std::ostream& out);
int cmd_free_particle(const Options& opts, std::ostream& out);
int cmd_validate(const Options& opts, std::ostream& out);

/// Parses argv, dispatches, and maps errors to exit codes.
int run(int argc, char** argv);

}  // namespace qlqg::cli
