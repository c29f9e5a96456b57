#include <catch2/catch.hpp>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "detopt/certificate_io.hpp"
#include "detopt/seqnet.hpp"

namespace {

int run_cli(const std::string& args) {
  const std::string command = std::string(DETOPT_CLI_PATH) + " " + args + " > cli_stdout.txt 2> cli_stderr.txt";
  const int status = std::system(command.c_str());
  REQUIRE(status != -1);
#ifdef _WIN32
  return status;
#else
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
#endif
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void spit(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

}  // namespace

TEST_CASE("construct and fresh-process verify round trip", "[cli]") {
  REQUIRE(run_cli("construct kmn --m 2 --n 3 --out cert_k23.json") == 0);

  const detopt::Certificate cert = detopt::read_certificate(slurp("cert_k23.json"));
  const Eigen::VectorXd expected = detopt::seq::rates_n3(2).values;
  REQUIRE(cert.rates.values.size() == expected.size());
  for (int k = 0; k < expected.size(); ++k) {
    CHECK(cert.rates.values(k) == Approx(expected(k)).epsilon(1e-12));
  }

  CHECK(run_cli("verify cert_k23.json") == 0);
}

TEST_CASE("construct from a network file", "[cli]") {
  spit("k23.crn", "X1 + X2 -> 0\nX2 + X3 -> 0\nX1 -> 2 X3\n@fully_open\n");

  SECTION("recognized network gets the default witness and the general engine") {
    CHECK(run_cli("construct k23.crn --out cert_file.json") == 0);
    CHECK(run_cli("verify cert_file.json") == 0);
  }

  SECTION("a witness violating condition (II) is inconclusive") {
    CHECK(run_cli("construct k23.crn --witness 1,2,3 --eta-tilde 1,1,1 --out unused.json") == 2);
  }

  SECTION("free-variable strategy") {
    CHECK(run_cli("construct k23.crn --strategy free-variable --out cert_fv.json") == 0);
    CHECK(run_cli("verify cert_fv.json") == 0);
  }
}

TEST_CASE("input errors exit with code 1", "[cli]") {
  CHECK(run_cli("construct no_such_file.crn") == 1);
  CHECK(run_cli("verify no_such_cert.json") == 1);
  spit("garbage.json", "this is not a certificate");
  CHECK(run_cli("verify garbage.json") == 1);
}

TEST_CASE("even n is inconclusive", "[cli]") {
  CHECK(run_cli("construct kmn --m 2 --n 4 --out unused.json") == 2);
}

TEST_CASE("tampered certificates fail verification", "[cli]") {
  REQUIRE(run_cli("construct kmn --m 3 --n 3 --out cert_tamper.json") == 0);
  nlohmann::json doc = nlohmann::json::parse(slurp("cert_tamper.json"));
  doc["xSharp"][0] = doc["xSharp"][0].get<double>() * 1.5;
  spit("cert_tamper.json", doc.dump());
  CHECK(run_cli("verify cert_tamper.json") == 3);
}

TEST_CASE("a degenerate eps constructs exact steady states that fail nondegeneracy", "[cli]") {
  auto det_star_at = [](double eps) {
    const detopt::Certificate c =
        detopt::seq::closed_form_certificate(detopt::seq::SeqParams::checked(2, 3, 1.0, eps, 1.0));
    return detopt::jacobian_determinant(c.network, c.rates, c.x_star);
  };
  double lo = 0.1235, hi = 0.1247;
  while (hi - lo > 1e-15) {
    const double mid = 0.5 * (lo + hi);
    (det_star_at(mid) > 0.0 ? lo : hi) = mid;
  }
  CHECK(run_cli("construct kmn --m 2 --n 3 --eps " + detopt::detail::format_17g(0.5 * (lo + hi)) +
                " --out cert_degen.json") == 3);
  CHECK(run_cli("verify cert_degen.json") == 3);
  const std::string report = slurp("cli_stdout.txt");
  CHECK(report.find("DEGENERATE") != std::string::npos);
  CHECK(report.find("residual at x*     : 0.000e+00  [ok]") != std::string::npos);
}

TEST_CASE("table command writes the CSV and passes", "[cli]") {
  REQUIRE(run_cli("table1 --out table1.csv") == 0);
  const std::string csv = slurp("table1.csv");
  CHECK(csv.rfind("m,detStar,detSharp\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 19);  // header + m = 2..19
}

TEST_CASE("scan command writes one CSV per n", "[cli]") {
  REQUIRE(run_cli("scan --m 2..3 --n 5 --out cli_scan_") == 0);
  const std::string csv = slurp("cli_scan_n5.csv");
  CHECK(csv.rfind("m,detStar,detSharp\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
}

TEST_CASE("sweep command brackets the first root", "[cli]") {
  REQUIRE(run_cli("sweep --m 2 --n 3 --eps 0.05..0.3 --steps 100 --out cli_sweep.csv") == 0);
  const std::string csv = slurp("cli_sweep.csv");
  CHECK(csv.rfind("eps,detStar,detSharp\n", 0) == 0);
  const std::string stdout_text = slurp("cli_stdout.txt");
  CHECK(stdout_text.find("det df(x*) root in (0.12") != std::string::npos);
}
