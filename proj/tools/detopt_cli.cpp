// Command-line front end: construct and verify multistationarity
// certificates, reproduce the reference determinant table, scan small
// sequestration networks, and sweep the bifurcation parameter.
//
// Exit codes: 0 success, 1 input error, 2 method inconclusive,
// 3 verification failure.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "detopt/detopt.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInputError = 1;
constexpr int kExitInconclusive = 2;
constexpr int kExitVerificationFailed = 3;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << content;
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) values.push_back(std::stoi(item));
  return values;
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) values.push_back(std::stod(item));
  return values;
}

std::pair<double, double> parse_double_range(const std::string& text) {
  const size_t sep = text.find("..");
  if (sep == std::string::npos) throw std::runtime_error("expected a range like 0.05..1.3, got '" + text + "'");
  return {std::stod(text.substr(0, sep)), std::stod(text.substr(sep + 2))};
}

std::pair<int, int> parse_int_range(const std::string& text) {
  const size_t sep = text.find("..");
  if (sep == std::string::npos) throw std::runtime_error("expected a range like 2..5, got '" + text + "'");
  return {std::stoi(text.substr(0, sep)), std::stoi(text.substr(sep + 2))};
}

std::string g17(double v) { return detopt::detail::format_17g(v); }

void print_report(const detopt::VerificationReport& report) {
  std::printf("residual at x*     : %.3e  [%s]\n", report.residual_star, report.residual_star_ok ? "ok" : "FAIL");
  std::printf("residual at x#     : %.3e  [%s]\n", report.residual_sharp, report.residual_sharp_ok ? "ok" : "FAIL");
  std::printf("det df(x*)         : %.6g  [%s]\n", report.det_star,
              report.nondegenerate_star ? "nondegenerate" : "DEGENERATE");
  std::printf("det df(x#)         : %.6g  [%s]\n", report.det_sharp,
              report.nondegenerate_sharp ? "nondegenerate" : "DEGENERATE");
  std::printf("states distinct    : %s\n", report.distinct ? "yes" : "NO");
  std::printf("rates positive     : %s\n", report.rates_positive ? "yes" : "NO");
}

struct ConstructArgs {
  std::string source;
  int m = 2;
  int n = 3;
  std::string witness_spec;
  std::string eta_tilde_spec;
  double lambda = 1.0;
  std::optional<double> eps;
  double delta1 = 1.0;
  std::string strategy;
  double tol_residual = 1e-10;
  double tol_det = 1e-8;
  std::string out = "certificate.json";
};

int finish_certificate(const detopt::Certificate& cert, const ConstructArgs& args) {
  write_file(args.out, detopt::write_certificate(cert));
  const detopt::VerificationReport report = detopt::verify_certificate(cert, args.tol_residual, args.tol_det);
  std::printf("certificate written to %s\n", args.out.c_str());
  print_report(report);
  if (!report.all_pass()) {
    std::fprintf(stderr, "error: constructed certificate failed verification\n");
    return kExitVerificationFailed;
  }
  return kExitOk;
}

int run_construct(const ConstructArgs& args, bool strategy_given) {
  using namespace detopt;

  Network net;
  std::optional<std::pair<int, int>> seq_id;
  if (args.source == "kmn") {
    net = build_sequestration(args.m, args.n);
    seq_id = {args.m, args.n};
  } else {
    net = parse_network(read_file(args.source)).first;
    if (!is_fully_open(net)) {
      throw std::invalid_argument("network is not fully open; add @fully_open or the flow reactions");
    }
    seq_id = recognize_sequestration(net);
  }

  // Sequestration networks with odd n default to the closed forms unless a
  // witness or strategy asks for the general engine.
  const bool closed_form_applicable =
      seq_id && seq_id->second % 2 == 1 && seq_id->second >= 3 && seq_id->first >= 2;
  if (closed_form_applicable && args.witness_spec.empty() && !strategy_given) {
    const auto [m, n] = *seq_id;
    const seq::SeqParams params =
        seq::SeqParams::checked(m, n, args.lambda, args.eps.value_or(seq::default_eps_for(n)), args.delta1);
    CertificateOptions opts;
    opts.tol_residual = args.tol_residual;
    opts.tol_det = args.tol_det;
    std::printf("constructing from the closed forms (m=%d, n=%d, lambda=%g, eps=%g, delta1=%g)\n", m, n,
                params.lambda, params.eps, params.delta1);
    return finish_certificate(seq::closed_form_certificate(params, opts), args);
  }

  HypothesisWitness witness;
  if (!args.witness_spec.empty()) {
    for (int index : parse_int_list(args.witness_spec)) witness.reaction_indices.push_back(index - 1);
    const int count = static_cast<int>(witness.reaction_indices.size());
    witness.eta_tilde = Eigen::VectorXd::Ones(count);
    if (!args.eta_tilde_spec.empty()) {
      const std::vector<double> values = parse_double_list(args.eta_tilde_spec);
      if (static_cast<int>(values.size()) != count) {
        throw std::invalid_argument("--eta-tilde must list one weight per witness reaction");
      }
      for (int i = 0; i < count; ++i) witness.eta_tilde(i) = values[i];
    }
  } else if (seq_id) {
    const auto [m, n] = *seq_id;
    for (int i = 0; i < n; ++i) witness.reaction_indices.push_back(i);
    witness.eta_tilde = Eigen::VectorXd::Ones(n);
    if (n >= 2) witness.eta_tilde(n - 2) = m + 1;
    std::printf("using the internal reactions as witness with weights (1, ..., 1, m+1, 1)\n");
  } else {
    throw std::invalid_argument("network not recognized; provide --witness (and optionally --eta-tilde)");
  }

  MethodConfig config;
  config.tol_residual = args.tol_residual;
  config.tol_det = args.tol_det;
  config.delta_scaling = args.delta1;
  if (args.strategy == "free-variable") config.strategy = MethodConfig::EtaZeroStrategy::FreeVariable;
  return finish_certificate(run_method(net, witness, config), args);
}

int run_verify(const std::string& path, double tol_residual, double tol_det) {
  const detopt::Certificate cert = detopt::read_certificate(read_file(path));
  const detopt::VerificationReport report = detopt::verify_certificate(cert, tol_residual, tol_det);
  print_report(report);
  if (!report.all_pass()) {
    std::fprintf(stderr, "verification FAILED\n");
    return kExitVerificationFailed;
  }
  std::printf("verification passed\n");
  return kExitOk;
}

int run_table1(const std::string& out_csv) {
  const detopt::seq::Table1Result result = detopt::seq::reproduce_table1();
  std::string csv = "m,detStar,detSharp\n";
  std::printf("%-4s %-22s %-10s %-6s %-22s %-10s %-6s\n", "m", "det df(x*)", "reference", "", "det df(x#)",
              "reference", "");
  for (const auto& row : result.rows) {
    csv += std::to_string(row.m) + "," + g17(row.computed_d1) + "," + g17(row.computed_d2) + "\n";
    std::printf("%-4d %-22.15g %-10s %-6s %-22.15g %-10s %-6s\n", row.m, row.computed_d1,
                row.printed_d1 ? std::to_string(*row.printed_d1).substr(0, 6).c_str() : "-",
                row.printed_d1 ? (row.d1_ok ? "pass" : "FAIL") : "",
                row.computed_d2, std::to_string(*row.printed_d2).substr(0, 7).c_str(),
                row.d2_ok ? "pass" : "FAIL");
  }
  if (!out_csv.empty()) {
    write_file(out_csv, csv);
    std::printf("wrote %s\n", out_csv.c_str());
  }
  std::printf("%d comparisons, %s\n", result.comparisons, result.all_pass ? "all pass" : "FAILURES present");
  return result.all_pass ? kExitOk : kExitVerificationFailed;
}

int run_scan(const std::string& m_range, const std::string& n_list, double lambda, std::optional<double> eps,
             double delta1, const std::string& prefix) {
  const auto [m_lo, m_hi] = parse_int_range(m_range);
  const std::vector<int> n_set = parse_int_list(n_list);
  const std::vector<detopt::seq::ScanCell> cells = detopt::seq::small_mn_scan(m_lo, m_hi, n_set, lambda, eps, delta1);

  bool all_ok = true;
  for (int n : n_set) {
    std::string csv = "m,detStar,detSharp\n";
    for (const auto& cell : cells) {
      if (cell.n != n) continue;
      if (cell.error.empty()) {
        csv += std::to_string(cell.m) + "," + g17(cell.det_star) + "," + g17(cell.det_sharp) + "\n";
      }
      std::printf("m=%-3d n=%-3d  det(x*)=%-14.6g det(x#)=%-14.6g  %s\n", cell.m, cell.n, cell.det_star,
                  cell.det_sharp,
                  !cell.error.empty() ? ("failed: " + cell.error).c_str()
                                      : (cell.ok && cell.both_nonzero ? "nondegenerate" : "DEGENERATE"));
      all_ok = all_ok && cell.error.empty() && cell.ok && cell.both_nonzero;
    }
    const std::string path = prefix + "n" + std::to_string(n) + ".csv";
    write_file(path, csv);
    std::printf("wrote %s\n", path.c_str());
  }
  return all_ok ? kExitOk : kExitInconclusive;
}

int run_sweep(int m, int n, double lambda, const std::string& eps_range, int steps, const std::string& out_csv) {
  const auto [lo, hi] = parse_double_range(eps_range);
  const detopt::seq::SweepResult sweep = detopt::seq::epsilon_sweep(m, n, lambda, lo, hi, steps);

  std::string csv = "eps,detStar,detSharp\n";
  for (const auto& sample : sweep.samples) {
    csv += g17(sample.eps) + "," + g17(sample.det_star) + "," + g17(sample.det_sharp) + "\n";
  }
  if (!out_csv.empty()) {
    write_file(out_csv, csv);
    std::printf("wrote %s (%zu samples)\n", out_csv.c_str(), sweep.samples.size());
  }
  for (const auto& failure : sweep.failures) {
    std::fprintf(stderr, "warning: eps=%g evaluation failed: %s\n", failure.eps, failure.reason.c_str());
  }

  bool verified = true;
  auto show = [&](const char* label, const std::vector<detopt::seq::SignBracket>& brackets) {
    for (const auto& b : brackets) {
      const bool sign_change = (b.value_lo < 0.0) != (b.value_hi < 0.0);
      verified = verified && sign_change;
      std::printf("%s root in (%s, %s), width %.2e, endpoint values (%.3e, %.3e)\n", label, g17(b.lo).c_str(),
                  g17(b.hi).c_str(), b.hi - b.lo, b.value_lo, b.value_hi);
    }
  };
  show("det df(x*)", sweep.star_brackets);
  show("det df(x#)", sweep.sharp_brackets);
  if (sweep.star_brackets.empty() && sweep.sharp_brackets.empty()) {
    std::printf("no sign changes in (%g, %g)\n", lo, hi);
  }
  return verified ? kExitOk : kExitVerificationFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multistationarity certificates for mass-action reaction networks"};
  app.require_subcommand(1);

  ConstructArgs cargs;
  CLI::App* construct = app.add_subcommand(
      "construct", "Construct a certificate for a network file, or 'kmn' with --m/--n for a sequestration network");
  construct->add_option("source", cargs.source, "network file, or 'kmn'")->required();
  construct->add_option("--m", cargs.m, "sequestration multiplicity (with 'kmn')");
  construct->add_option("--n", cargs.n, "species count (with 'kmn')");
  construct->add_option("--witness", cargs.witness_spec, "1-based internal/outflow reaction indices, e.g. 1,2,3");
  construct->add_option("--eta-tilde", cargs.eta_tilde_spec, "witness weights, e.g. 1,3,1");
  construct->add_option("--lambda", cargs.lambda, "closed-form lambda (default 1)")->check(CLI::PositiveNumber);
  double eps_value = 0.0;
  CLI::Option* eps_opt = construct->add_option("--eps", eps_value, "closed-form eps (default 0.1 for n=3, else 0.001)")
                             ->check(CLI::PositiveNumber);
  construct->add_option("--delta1", cargs.delta1, "nullvector scaling (default 1)");
  CLI::Option* strategy_opt = construct->add_option("--strategy", cargs.strategy, "bisect | free-variable")
                                  ->check(CLI::IsMember({"bisect", "free-variable"}));
  construct->add_option("--tol-residual", cargs.tol_residual, "steady-state residual tolerance")
      ->check(CLI::PositiveNumber);
  construct->add_option("--tol-det", cargs.tol_det, "nondegeneracy determinant tolerance")
      ->check(CLI::PositiveNumber);
  construct->add_option("--out", cargs.out, "certificate output path");

  std::string verify_path;
  double verify_tol_residual = 1e-10;
  double verify_tol_det = 1e-8;
  CLI::App* verify = app.add_subcommand("verify", "Re-verify a certificate file from scratch");
  verify->add_option("certificate", verify_path)->required();
  verify->add_option("--tol-residual", verify_tol_residual)->check(CLI::PositiveNumber);
  verify->add_option("--tol-det", verify_tol_det)->check(CLI::PositiveNumber);

  std::string table_out = "table1.csv";
  CLI::App* table = app.add_subcommand("table1", "Reproduce the reference Jacobian determinant table");
  table->add_option("--out", table_out, "CSV output path");

  std::string scan_m = "2..5";
  std::string scan_n = "5,7,9,11";
  double scan_lambda = 1.0;
  double scan_eps_value = 0.0;
  double scan_delta1 = 1.0;
  std::string scan_prefix = "scan_";
  CLI::App* scan = app.add_subcommand("scan", "Build certificates over a grid of (m, n) and record determinants");
  scan->add_option("--m", scan_m, "m range, e.g. 2..5");
  scan->add_option("--n", scan_n, "comma-separated odd n values");
  scan->add_option("--lambda", scan_lambda)->check(CLI::PositiveNumber);
  CLI::Option* scan_eps_opt =
      scan->add_option("--eps", scan_eps_value, "override the per-n default eps")->check(CLI::PositiveNumber);
  scan->add_option("--delta1", scan_delta1);
  scan->add_option("--out", scan_prefix, "CSV path prefix (one file per n)");

  int sweep_m = 2, sweep_n = 3, sweep_steps = 500;
  double sweep_lambda = 1.0;
  std::string sweep_eps = "0.05..1.3";
  std::string sweep_out = "sweep.csv";
  CLI::App* sweep = app.add_subcommand("sweep", "Sweep eps and bracket the Jacobian determinant sign changes");
  sweep->add_option("--m", sweep_m);
  sweep->add_option("--n", sweep_n);
  sweep->add_option("--lambda", sweep_lambda)->check(CLI::PositiveNumber);
  sweep->add_option("--eps", sweep_eps, "eps range, e.g. 0.05..1.3");
  sweep->add_option("--steps", sweep_steps, "grid resolution");
  sweep->add_option("--out", sweep_out, "CSV output path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInputError;
  }

  try {
    if (construct->parsed()) {
      if (*eps_opt) cargs.eps = eps_value;
      return run_construct(cargs, static_cast<bool>(*strategy_opt));
    }
    if (verify->parsed()) return run_verify(verify_path, verify_tol_residual, verify_tol_det);
    if (table->parsed()) return run_table1(table_out);
    if (scan->parsed()) {
      std::optional<double> eps;
      if (*scan_eps_opt) eps = scan_eps_value;
      return run_scan(scan_m, scan_n, scan_lambda, eps, scan_delta1, scan_prefix);
    }
    if (sweep->parsed()) return run_sweep(sweep_m, sweep_n, sweep_lambda, sweep_eps, sweep_steps, sweep_out);
  } catch (const detopt::MethodError& e) {
    std::fprintf(stderr, "method inconclusive: %s\n", e.what());
    return e.kind == detopt::MethodErrorKind::VerificationFailed ? kExitVerificationFailed : kExitInconclusive;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInputError;
  }
  return kExitInputError;
}
