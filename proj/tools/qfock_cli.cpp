#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "qfock/model.hpp"
#include "qfock/stochastic.hpp"
#include "qfock/wick.hpp"
#include "suites.hpp"

using namespace qfock;

namespace {

// Three-point nu on [0, 1) split into four atoms.
constexpr const char* kDefaultModel =
    "kind = body\n"
    "q = exact\n"
    "nu.atoms = [(-1, 1/3), (1/2, 1/3), (2, 1/3)]\n"
    "grid = uniform(1, 4)\n"
    "degree_cutoff = 6\n"
    "fock_depth = 6\n";

constexpr int kMaxDepth = 8;
constexpr int kMaxCutoff = 10;
constexpr int kMaxGrid = 64;
constexpr int kMaxConvergeN = 128;

struct RunConfig {
  std::string command;
  std::string model_path;
  std::string out_dir;
  std::vector<std::string> suites;
  std::vector<int> schedule{4, 8, 16, 32, 64};
  std::vector<std::string> partitions{"{1,2}", "{1,2,3}", "{1,3},{2}", "{1,2},{3}"};
  std::string q;
  std::uint64_t seed = 1;
  int nmax = 5;
  int depth = 0;
  int cutoff = 0;
  int grid = 0;
  std::string fault;
};

ConfigMap model_config(const RunConfig& rc) {
  ConfigMap cfg = rc.model_path.empty() ? parse_config(kDefaultModel) : load_config(rc.model_path);
  if (!rc.q.empty()) cfg["q"] = rc.q;
  if (rc.depth > 0) {
    if (rc.depth > kMaxDepth) throw UsageError("--depth is limited to " + std::to_string(kMaxDepth));
    cfg["fock_depth"] = std::to_string(rc.depth);
  }
  if (rc.cutoff > 0) {
    if (rc.cutoff > kMaxCutoff) throw UsageError("--cutoff is limited to " + std::to_string(kMaxCutoff));
    cfg["degree_cutoff"] = std::to_string(rc.cutoff);
  }
  if (rc.grid > 0) {
    if (rc.grid > kMaxGrid) throw UsageError("--grid is limited to " + std::to_string(kMaxGrid) + " atoms");
    const mpq_class T = cfg.count("grid") ? parse_grid(cfg["grid"]).horizon() : mpq_class(1);
    cfg["grid"] = "uniform(" + rational_to_string(T) + ", " + std::to_string(rc.grid) + ")";
  }
  return cfg;
}

ProcessModel load_model(const ConfigMap& cfg) {
  ProcessModel m = ProcessModel::from_config(cfg);
  if (m.fock_depth() > kMaxDepth) throw UsageError("fock_depth is limited to " + std::to_string(kMaxDepth));
  if (m.kind() == ProcessModel::Kind::Body && m.degree_cutoff() > kMaxCutoff) {
    throw UsageError("degree_cutoff is limited to " + std::to_string(kMaxCutoff));
  }
  if (m.grid().size() > kMaxGrid) throw UsageError("grid is limited to " + std::to_string(kMaxGrid) + " atoms");
  return m;
}

// Quotes a CSV field when it contains a separator.
std::string csv(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string fixed(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10e", x);
  return buf;
}

void emit(const RunConfig& rc, const std::string& file, const std::string& text) {
  if (rc.out_dir.empty()) {
    std::cout << text;
    return;
  }
  std::filesystem::create_directories(rc.out_dir);
  std::ofstream f(std::filesystem::path(rc.out_dir) / file);
  if (!f) throw UsageError("cannot write " + file + " in " + rc.out_dir);
  f << text;
}

int cmd_verify(const RunConfig& rc) {
  ConfigMap cfg = model_config(rc);
  // The identity suites are exact in Q[q].
  cfg["q"] = "exact";
  const ProcessModel m = load_model(cfg);
  const std::vector<std::string> suites = rc.suites.empty() ? tools::suite_names() : rc.suites;
  tools::SuiteConfig sc{rc.nmax, rc.seed, rc.fault};
  for (const auto& s : suites) tools::check_budget(s, m, sc);

  std::vector<std::future<std::vector<tools::SuiteRow>>> jobs;
  for (const auto& s : suites) jobs.push_back(std::async(std::launch::async, [&, s] { return tools::run_suite(s, m, sc); }));

  std::ostringstream os;
  os << "suite,identity,n,exact_zero,residual\n";
  std::vector<std::string> failed;
  for (auto& j : jobs) {
    for (const auto& r : j.get()) {
      os << r.suite << ',' << csv(r.identity) << ',' << r.n << ',' << (r.exact_zero ? "true" : "false") << ','
         << csv(r.residual) << '\n';
      if (!r.exact_zero) failed.push_back(r.suite + ": " + r.identity + " (n = " + std::to_string(r.n) + ")");
    }
  }
  emit(rc, "verify.csv", os.str());
  for (const auto& f : failed) std::cerr << "FAIL " << f << '\n';
  return failed.empty() ? 0 : 1;
}

int cmd_converge(const RunConfig& rc) {
  if (rc.schedule.size() < 3) throw UsageError("a slope fit needs at least 3 grid sizes in --schedule");
  for (int N : rc.schedule) {
    if (N < 2 || N % 2 != 0 || N > kMaxConvergeN) {
      throw UsageError("schedule entries must be even and in [2, " + std::to_string(kMaxConvergeN) + "]");
    }
  }
  const ConfigMap cfg = model_config(rc);
  const ProcessModel base = load_model(cfg);
  if (base.mode().exact) throw UsageError("converge runs in float mode; pass --q <value> or set q in the model");
  if (base.kind() != ProcessModel::Kind::Body) throw UsageError("converge needs a body model");
  const mpq_class T = base.grid().horizon();

  std::ostringstream data, fit;
  data << "experiment,N,delta,l2_error\n";
  fit << "experiment,slope,slope_squared\n";
  for (const auto& text : rc.partitions) {
    const SetPartition pi = SetPartition::parse(text);
    const ConvergenceTable tab = st_pi_convergence(base, pi, T, rc.schedule);
    const std::string name = "st_pi " + pi.to_string();
    for (const auto& row : tab.rows) data << csv(name) << ',' << row.N << ',' << fixed(row.delta) << ',' << fixed(row.error) << '\n';
    if (tab.all_exact) {
      fit << csv(name) << ",exact,exact\n";
    } else {
      fit << csv(name) << ',' << fixed(tab.slope) << ',' << fixed(tab.slope_squared) << '\n';
    }
  }

  // Two-sided integral with U = W(chi_[0,T/2)) on [T/2, T): discrete sum against the closed form.
  std::vector<double> logd, loge, loge2;
  for (int N : rc.schedule) {
    ConfigMap c = cfg;
    c["grid"] = "uniform(" + rational_to_string(T) + ", " + std::to_string(N) + ")";
    const ProcessModel m = load_model(c);
    const mpq_class half = T / 2;
    const FockVector eta = FockVector::tensor({m.interval_vector({mpq_class(0), half}, 1)});
    AdaptedProcess U{{{{half, T}, eta}}};
    const FockVector omega = FockVector::vacuum(m.mode().one());
    const FockVector d = two_sided_discrete(m, U).apply(m.space(), omega) - two_sided_integral(m, U).apply(m.space(), omega);
    const double e2 = m.space().normq2(d).to_double(m.mode().q0);
    const double delta = mpq_class(T / N).get_d();
    data << "two_sided," << N << ',' << fixed(delta) << ',' << fixed(std::sqrt(std::max(e2, 0.0))) << '\n';
    logd.push_back(std::log(delta));
    loge.push_back(0.5 * std::log(e2));
    loge2.push_back(std::log(e2));
  }
  fit << "two_sided," << fixed(fit_slope(logd, loge)) << ',' << fixed(fit_slope(logd, loge2)) << '\n';

  emit(rc, "converge.csv", data.str());
  if (rc.out_dir.empty()) std::cout << '\n';
  emit(rc, "converge_fit.csv", fit.str());
  return 0;
}

int cmd_moments(const RunConfig& rc) {
  const ConfigMap cfg = model_config(rc);
  const ProcessModel m = load_model(cfg);
  if (rc.nmax < 1 || rc.nmax > kMaxMomentLength) {
    throw UsageError("--nmax must be in [1, " + std::to_string(kMaxMomentLength) + "] for moments");
  }
  if (m.kind() == ProcessModel::Kind::Body && rc.nmax > m.degree_cutoff()) {
    throw UsageError("moments up to n = " + std::to_string(rc.nmax) + " need degree_cutoff >= " +
                     std::to_string(rc.nmax) + " (--cutoff)");
  }
  const Letter x = m.letter_of_interval_power(m.whole(), 1);
  std::ostringstream os;
  os << "n,moment" << (m.mode().exact ? "" : ",value") << '\n';
  for (int n = 1; n <= rc.nmax; ++n) {
    const QScalar v = vacuum_moment(m.algebra(), std::vector<Letter>(n, x));
    os << n << ',' << csv(v.to_string());
    if (!m.mode().exact) os << ',' << fixed(v.to_double(m.mode().q0));
    os << '\n';
  }
  emit(rc, "moments.csv", os.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact and numeric checks for q-Levy processes on the q-Fock space"};
  app.set_config("--config", "", "Config file; keys mirror the long flags, flags win");
  app.require_subcommand(1);

  RunConfig rc;
  app.add_option("--model", rc.model_path, "Model file (key = value)")->check(CLI::ExistingFile);
  app.add_option("--out", rc.out_dir, "Write reports into this directory instead of stdout");
  app.add_option("--suite", rc.suites, "Suites to run (comma separated)")->delimiter(',');
  app.add_option("--q", rc.q, "Override q: a rational value or 'exact'");
  app.add_option("--seed", rc.seed, "Seed for random letters and vectors");
  app.add_option("--nmax", rc.nmax, "Largest size parameter n");
  app.add_option("--depth", rc.depth, "Override fock_depth")->check(CLI::PositiveNumber);
  app.add_option("--cutoff", rc.cutoff, "Override degree_cutoff")->check(CLI::PositiveNumber);
  app.add_option("--grid", rc.grid, "Override the grid with N uniform atoms")->check(CLI::PositiveNumber);
  app.add_option("--schedule", rc.schedule, "Grid sizes for converge (comma separated)")->delimiter(',');
  app.add_option("--partitions", rc.partitions, "Partitions for converge, separated by ';'")->delimiter(';');
  app.add_option("--inject-fault", rc.fault, "Flip a sign inside the named suite")->group("");

  auto* verify = app.add_subcommand("verify", "Run the exact identity suites");
  auto* converge = app.add_subcommand("converge", "Refinement experiments (float mode)");
  auto* moments = app.add_subcommand("moments", "Vacuum moments of X(1) as polynomials in q");
  for (auto* sub : {verify, converge, moments}) sub->fallthrough();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*verify) return cmd_verify(rc);
    if (*converge) return cmd_converge(rc);
    return cmd_moments(rc);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}
