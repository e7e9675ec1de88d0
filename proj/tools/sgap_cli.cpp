//===- sgap_cli.cpp - Command-line driver -----------------------------===//
//
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//
//
//   sgap verify    --random 64x64:0.1:seed1 --point nnz:1,col:4,r:32
//   sgap sweep     --matrix a.mtx --random 32x32:0.2 --g 2,32 --c 1,4 --r 1,32
//   sgap enumerate --g 2,32 --c 1 --r 1,32
//   sgap emit      --point row:1/32,col:1,r:32 --out kernel.cu
//
// Exit status: 0 success, 1 verification failure, 2 usage error.
//
//===----------------------------------------------------------------------===//

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "sgap/codegen_cuda.hpp"
#include "sgap/design_space.hpp"
#include "sgap/lowering.hpp"
#include "sgap/serialize.hpp"
#include "sgap/simulator.hpp"
#include "sgap/sweep.hpp"

namespace {

constexpr int kUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::uint64_t default_seed() {
  if (const char* s = std::getenv("SGAP_SEED")) {
    try {
      return std::stoull(s);
    } catch (const std::exception&) {
      throw UsageError(std::string("SGAP_SEED must be an unsigned integer, got '") + s + "'");
    }
  }
  return 1;
}

std::set<std::int64_t> parse_set(const std::string& text, const char* flag) {
  std::set<std::int64_t> out;
  std::stringstream in(text);
  for (std::string f; std::getline(in, f, ',');) {
    if (f.empty()) continue;
    std::size_t used = 0;
    long long v = 0;
    try {
      v = std::stoll(f, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != f.size() || v < 1) throw UsageError(std::string("--") + flag + ": bad value '" + f + "'");
    out.insert(v);
  }
  return out;
}

sgap::AtomicParallelismPoint parse_templated_point(const std::string& text, std::int64_t N, std::int64_t p) {
  sgap::AtomicParallelismPoint pt;
  try {
    pt = sgap::parse_point(text);
  } catch (const sgap::PointError& e) {
    throw UsageError(e.what());
  }
  if (auto why = sgap::template_problem(pt, N, p); !why.empty()) throw UsageError(why);
  return pt;
}

std::vector<sgap::MatrixSource> load_sources(const std::vector<std::string>& paths,
                                             const std::vector<std::string>& randoms, std::uint64_t seed) {
  std::vector<sgap::MatrixSource> out;
  for (const auto& path : paths) {
    sgap::MatrixSource s{path};
    try {
      s.matrix = sgap::load_matrix_market(path);
    } catch (const std::exception& e) {
      s.error = e.what();
    }
    out.push_back(std::move(s));
  }
  for (const auto& r : randoms) {
    sgap::RandomSpec spec;
    try {
      spec = sgap::parse_random_spec(r, seed);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    out.push_back({spec.name(), spec.build()});
  }
  return out;
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write '" + path + "'");
  out << text;
}

struct Common {
  std::int64_t N = 4;
  std::int64_t p = 256;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--N", c.N, "dense columns")->check(CLI::PositiveNumber);
  cmd->add_option("--p", c.p, "threads per block")->check(CLI::PositiveNumber);
}

struct VerifyOutputs {
  std::string dump_c;
  std::string metrics_json;
  bool single_precision = false;
};

int cmd_verify(const std::string& matrix, const std::string& random, const std::string& point, const Common& c,
               double tolerance, const VerifyOutputs& outs) {
  const auto pt = parse_templated_point(point, c.N, c.p);
  if (matrix.empty() == random.empty()) throw UsageError("give exactly one of --matrix and --random");
  auto sources = load_sources(matrix.empty() ? std::vector<std::string>{} : std::vector{matrix},
                              random.empty() ? std::vector<std::string>{} : std::vector{random}, default_seed());
  auto& src = sources.front();
  if (!src.matrix) {
    std::cerr << "error: " << src.error << "\n";
    return kUsage;
  }
  sgap::SweepOptions opt;
  opt.N = c.N;
  opt.p = c.p;
  opt.tolerance = tolerance;
  opt.seed = default_seed();
  opt.single_precision = outs.single_precision;
  const auto row = sgap::evaluate_point(src.name, *src.matrix, pt, opt);
  if (!outs.dump_c.empty() && row.status != sgap::RowStatus::Error) {
    // Runs are deterministic, so a second run reproduces the checked C.
    const sgap::KernelConfig cfg{pt, c.N, c.p};
    sgap::SimOptions sim;
    sim.single_precision = outs.single_precision;
    const auto& A = *src.matrix;
    const auto res = sgap::run(sgap::lower(sgap::algorithm_template(cfg), A, cfg), A,
                               sgap::random_dense(A.num_cols, c.N, opt.seed), sim);
    write_output(outs.dump_c, sgap::dense_text(res.C));
  }
  if (!outs.metrics_json.empty()) write_output(outs.metrics_json, nlohmann::json(row).dump(2) + "\n");
  std::cout << "matrix " << src.name << " (" << src.matrix->num_rows << "x" << src.matrix->num_cols << ", nnz "
            << src.matrix->nnz() << ")\n";
  std::cout << "point " << pt.str() << " N=" << c.N << " p=" << c.p << "\n";
  if (row.status == sgap::RowStatus::Error) {
    std::cout << "FAIL " << row.message << "\n";
    return 1;
  }
  std::cout << "max relative error " << row.max_rel_error << " (tolerance " << tolerance << ")\n";
  std::cout << "max_warp_steps " << row.metrics.max_warp_steps << ", atomic_ops " << row.metrics.atomic_ops
            << ", idle_lane_steps " << row.metrics.idle_lane_steps << "\n";
  std::cout << (row.status == sgap::RowStatus::Pass ? "PASS" : "FAIL") << "\n";
  return row.status == sgap::RowStatus::Pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Atomic-parallelism SpMM kernels: verify, sweep, enumerate, emit"};
  app.require_subcommand(1);

  Common common;
  std::string matrix, random, point, out, format = "csv", g_set = "2,4,8,16,32", c_set = "1,2,4",
                                              r_set = "1,2,4,8,16,32";
  std::vector<std::string> matrices, randoms;
  double tolerance = 1e-4;
  bool da_spmm = false;
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());

  auto* verify = app.add_subcommand("verify", "simulate one point and compare against the dense oracle");
  verify->add_option("--matrix", matrix, "Matrix Market file");
  verify->add_option("--random", random, "random matrix RxC:density[:seed]");
  verify->add_option("--point", point, "kind:amount,col:amount,r:N")->required();
  verify->add_option("--tolerance", tolerance, "max relative error")->check(CLI::NonNegativeNumber);
  VerifyOutputs verify_outs;
  verify->add_option("--dump-c", verify_outs.dump_c, "write the simulated C as a text grid");
  verify->add_option("--metrics-json", verify_outs.metrics_json, "write the result row and metrics as JSON");
  verify->add_flag("--single-precision", verify_outs.single_precision, "round kernel scalars to float");
  add_common(verify, common);

  auto* sweep = app.add_subcommand("sweep", "verify and measure every legal point on a matrix set");
  sweep->add_option("--matrix", matrices, "Matrix Market files");
  sweep->add_option("--random", randoms, "random matrices RxC:density[:seed]");
  sweep->add_option("--g", g_set, "group sizes");
  sweep->add_option("--c", c_set, "column amounts");
  sweep->add_option("--r", r_set, "reduction parallelism values");
  sweep->add_flag("--da-spmm", da_spmm, "use the four DA-SpMM points (column amount from --c)");
  sweep->add_option("--out", out, "output path, '-' for stdout");
  sweep->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  sweep->add_option("--tolerance", tolerance, "max relative error")->check(CLI::NonNegativeNumber);
  sweep->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  add_common(sweep, common);

  auto* enumerate = app.add_subcommand("enumerate", "list points with their legality");
  enumerate->add_option("--g", g_set, "group sizes");
  enumerate->add_option("--c", c_set, "column amounts");
  enumerate->add_option("--r", r_set, "reduction parallelism values");
  enumerate->add_option("--out", out, "output path, '-' for stdout");

  auto* emit = app.add_subcommand("emit", "write CUDA-flavored source for one point");
  emit->add_option("--point", point, "kind:amount,col:amount,r:N")->required();
  emit->add_option("--matrix", matrix, "Matrix Market file");
  emit->add_option("--random", random, "random matrix RxC:density[:seed] (default 64x64:0.1)");
  emit->add_option("--out", out, "output path, '-' for stdout");
  add_common(emit, common);

  CLI11_PARSE(app, argc, argv);

  try {
    if (verify->parsed()) return cmd_verify(matrix, random, point, common, tolerance, verify_outs);

    if (sweep->parsed()) {
      std::vector<sgap::AtomicParallelismPoint> points;
      if (da_spmm) {
        for (auto c : parse_set(c_set, "c"))
          for (const auto& np : sgap::da_spmm_points(c)) points.push_back(np.point);
      } else {
        points = sgap::enumerate_space(parse_set(g_set, "g"), parse_set(c_set, "c"), parse_set(r_set, "r"));
      }
      const auto sources = load_sources(matrices, randoms, default_seed());
      for (const auto& s : sources)
        if (!s.matrix) std::cerr << "warning: skipping " << s.name << ": " << s.error << "\n";
      sgap::SweepOptions opt;
      opt.N = common.N;
      opt.p = common.p;
      opt.tolerance = tolerance;
      opt.seed = default_seed();
      opt.threads = threads;
      const auto rows = sgap::sweep(sources, points, opt);
      write_output(out, format == "json" ? sgap::sweep_json(rows) : sgap::sweep_csv(rows));
      bool failed = false;
      for (const auto& r : rows) failed |= r.status == sgap::RowStatus::Fail || r.status == sgap::RowStatus::Error;
      return failed ? 1 : 0;
    }

    if (enumerate->parsed()) {
      std::string text;
      for (const auto& pt : sgap::cross_product(parse_set(g_set, "g"), parse_set(c_set, "c"), parse_set(r_set, "r"))) {
        text += pt.cli_str();
        if (auto rule = sgap::illegal_rule(pt)) text += "\trejected\tRule " + std::to_string(*rule) + "\n";
        else if (auto f = sgap::template_family(pt)) text += "\tlegal\ttemplate " + std::to_string(static_cast<int>(*f)) + "\n";
        else text += "\tlegal\tno template\n";
      }
      write_output(out, text);
      return 0;
    }

    if (emit->parsed()) {
      const auto pt = parse_templated_point(point, common.N, common.p);
      if (!matrix.empty() && !random.empty()) throw UsageError("give at most one of --matrix and --random");
      auto sources = load_sources(matrix.empty() ? std::vector<std::string>{} : std::vector{matrix},
                                  matrix.empty() ? std::vector{random.empty() ? std::string("64x64:0.1") : random}
                                                 : std::vector<std::string>{},
                                  default_seed());
      if (!sources.front().matrix) throw UsageError(sources.front().error);
      const sgap::KernelConfig cfg{pt, common.N, common.p};
      const auto kernel = sgap::lower(sgap::algorithm_template(cfg), *sources.front().matrix, cfg);
      write_output(out, sgap::emit_cuda(kernel));
      return 0;
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
