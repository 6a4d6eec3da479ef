#pragma once

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "alpn/tensor.hpp"

namespace alpn::test {

// |a - b| <= tol * max(|a|, |b|) with a small absolute floor for gradients
// that are legitimately ~0.
inline bool close_rel(double a, double b, double tol, double abs_floor = 1e-7) {
  const double diff = std::abs(a - b);
  return diff <= tol * std::max(std::abs(a), std::abs(b)) + abs_floor;
}

struct GradCheckResult {
  bool ok = true;
  double worst_rel = 0.0;
  std::string worst_name;
  double analytic = 0.0;
  double numeric = 0.0;
};

// Central finite differences over every element of `params`. `loss` must be a
// pure function of the current parameter values; `fill_grads` must zero and
// then populate param.grad with the analytic gradient of the same loss.
inline GradCheckResult check_gradients(
    const std::vector<ParamTensor*>& params,
    const std::function<double()>& loss,
    const std::function<void()>& fill_grads, double tol = 1e-4,
    double step = 1e-5) {
  for (ParamTensor* p : params) p->zero_grad();
  fill_grads();
  GradCheckResult res;
  for (ParamTensor* p : params) {
    for (Eigen::Index idx = 0; idx < p->size(); ++idx) {
      double* v = p->value.data() + idx;
      const double keep = *v;
      *v = keep + step;
      const double up = loss();
      *v = keep - step;
      const double down = loss();
      *v = keep;
      const double numeric = (up - down) / (2.0 * step);
      const double analytic = p->grad.data()[idx];
      const double diff = std::abs(analytic - numeric);
      const double denom =
          std::max({std::abs(analytic), std::abs(numeric), 1e-7});
      const double rel = diff / denom;
      if (rel > res.worst_rel) {
        res.worst_rel = rel;
        res.worst_name = p->name + "[" + std::to_string(idx) + "]";
        res.analytic = analytic;
        res.numeric = numeric;
      }
      if (!close_rel(analytic, numeric, tol)) res.ok = false;
    }
  }
  return res;
}

// Fresh scratch directory under the system temp root.
inline std::string scratch_dir(const std::string& name) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() /
                       ("alpn_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir.string();
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

struct CliResult {
  int exit_code = -1;
  std::string output;  // stdout + stderr
};

// Runs the built CLI binary with the given arguments.
inline CliResult run_cli(const std::string& args) {
  CliResult res;
  const std::string cmd = std::string(ALPN_CLI_PATH) + " " + args + " 2>&1";
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (pipe == nullptr) return res;
  char buf[4096];
  while (std::fgets(buf, sizeof(buf), pipe) != nullptr) res.output += buf;
  const int status = ::pclose(pipe);
  res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return res;
}

}  // namespace alpn::test
