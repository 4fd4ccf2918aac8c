#include <doctest.h>

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "symred/scenario.hpp"

using namespace symred;

namespace {

struct Result {
  int code = -1;
  std::string out;
};

/// Runs symred with the given arguments; stdout and stderr are captured together.
Result invoke(const std::string& args) {
  const std::string cmd = std::string("\"") + SYMRED_BIN + "\" " + args + " 2>&1";
  Result r;
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, p)) r.out.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string scenario(const std::string& name) { return std::string(SYMRED_SCENARIOS) + "/" + name + ".sym"; }

std::string read(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::filesystem::path temp_file(const std::string& name, const std::string& content = "") {
  const auto p = std::filesystem::temp_directory_path() / ("symred_test_" + name);
  if (!content.empty()) std::ofstream(p) << content;
  return p;
}

const char* kMinimal = R"(indep x, t;
dep u;
param A;
constraint ode: u[x,x] = u[x]^3;
field K = A*u[x]^-3*u[x,x];
check K on ode;
)";

}  // namespace

TEST_CASE("bundled scenarios pass") {
  for (const char* name : {"liouville_moutard", "utx_family", "kdv_pair", "theorem2_demo"}) {
    CAPTURE(name);
    const auto t0 = std::chrono::steady_clock::now();
    const Result r = invoke("run \"" + scenario(name) + "\"");
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    CHECK(r.code == 0);
    CHECK(r.out.find("FAIL") == std::string::npos);
    CHECK(secs < 60);
  }
}

TEST_CASE("JSON reports are deterministic apart from timing") {
  for (const char* name : {"liouville_moutard", "utx_family", "kdv_pair", "theorem2_demo"}) {
    CAPTURE(name);
    const auto a = temp_file(std::string(name) + "_a.json"), b = temp_file(std::string(name) + "_b.json");
    REQUIRE(invoke("run \"" + scenario(name) + "\" --quiet --json \"" + a.string() + "\"").code == 0);
    REQUIRE(invoke("run \"" + scenario(name) + "\" --quiet --json \"" + b.string() + "\"").code == 0);
    const Json ja = Json::parse(read(a.string())), jb = Json::parse(read(b.string()));
    CHECK(ja.contains("timing"));
    CHECK(strip_timing(ja).dump() == strip_timing(jb).dump());
    CHECK(ja["passed"] == true);
    CHECK(ja["checks"].size() == ja["summary"]["checks"]);
  }
}

TEST_CASE("exit codes") {
  const auto ok = temp_file("ok.sym", kMinimal);
  CHECK(invoke("run \"" + ok.string() + "\"").code == 0);

  std::string failing = kMinimal;
  failing += "field K4 = u[x]^-1*u[x,x];\ncheck K4 on ode;\n";
  const auto bad = temp_file("fail.sym", failing);
  const Result f = invoke("run \"" + bad.string() + "\"");
  CHECK(f.code == 1);
  CHECK(f.out.find("FAIL") != std::string::npos);

  std::string undeclared = kMinimal;
  undeclared += "field K5 = zz*u[x];\n";
  const auto und = temp_file("undeclared.sym", undeclared);
  const Result u = invoke("run \"" + und.string() + "\"");
  CHECK(u.code == 2);
  CHECK(u.out.find("undeclared identifier 'zz'") != std::string::npos);
  CHECK(u.out.find(":7:") != std::string::npos);

  const Result unknown = invoke("run \"" + temp_file("unknown.sym", "indep x;\ndep u;\ncheck K on nothing;\n").string() + "\"");
  CHECK(unknown.code == 2);
  CHECK(unknown.out.find("unknown field 'K'") != std::string::npos);

  CHECK(invoke("run /nonexistent/file.sym").code == 2);
  CHECK(invoke("frobnicate").code == 2);
  CHECK(invoke("linearize --eq \"u[x] + (\"").code == 2);
  CHECK(invoke("check --field \"u\" --constraint \"u[x]^2 = u\"").code == 2);
}

TEST_CASE("malformed scenarios are rejected with parse errors, never crashes") {
  const std::string base = read(scenario("utx_family"));
  const std::vector<Token> toks = tokenize(base);
  std::mt19937 rng(7);
  const std::vector<std::string> junk{";", ",", "(", ")", "[", "]", "=", "zz", "u", "x", "1/0", "^", ":", "expect",
                                      "check", "2.5", "-", "D", "atom"};
  int parse_errors = 0;
  for (int i = 0; i < 120; ++i) {
    std::vector<std::string> parts;
    for (const Token& t : toks) {
      if (t.kind != TokenKind::End) parts.push_back(t.text);
    }
    const int edits = std::uniform_int_distribution<int>(1, 3)(rng);
    for (int e = 0; e < edits; ++e) {
      const std::size_t at = std::uniform_int_distribution<std::size_t>(0, parts.size() - 1)(rng);
      switch (std::uniform_int_distribution<int>(0, 2)(rng)) {
        case 0:
          parts.erase(parts.begin() + static_cast<long>(at));
          break;
        case 1:
          parts.insert(parts.begin() + static_cast<long>(at), junk[rng() % junk.size()]);
          break;
        default:
          parts[at] = junk[rng() % junk.size()];
      }
    }
    std::string text;
    for (const auto& p : parts) text += p + (p == ";" ? "\n" : " ");
    try {
      const Scenario sc = load_scenario(text, "mutated");
      (void)run_scenario(sc);
    } catch (const ParseError& e) {
      ++parse_errors;
      CHECK(std::string(e.what()).find(':') != std::string::npos);
    } catch (const std::exception& e) {
      FAIL("unexpected exception type: " << e.what() << "\n" << text);
    }
    if (i % 12 == 0) {
      const auto f = temp_file("mutated.sym", text);
      const int code = invoke("run --quiet \"" + f.string() + "\"").code;
      CHECK((code == 0 || code == 1 || code == 2));
    }
  }
  CHECK(parse_errors > 0);
}

TEST_CASE("subcommands") {
  CHECK(invoke("linearize --eq \"u[x,y] - 2*exp(u)\"").out == "w[x,y] - 2*exp(u)*w\n");
  CHECK(invoke("verdict --s 3 --k1 2 --eq-invariant --sys-invariant").out == "classical-invariant\n");
  CHECK(invoke("verdict --s 2 --k1 2 --eq-invariant --sys-invariant").out == "inconclusive\n");
  CHECK(invoke("commutator --f1 \"u*u[x]\" --f2 \"u\"").out == "-u*u[x]\n");
  CHECK(invoke("commutator --f1 \"u\" --f2 \"u*u[x]\"").out == "u*u[x]\n");

  const Result inv = invoke("check --field \"(A*u[x]^-3 + B*u[x]^-2)*u[x,x]\" --constraint \"u[x,x] = u[x]^3\"");
  CHECK(inv.code == 0);
  CHECK(inv.out == "defect: 0\ninvariant\n");
  CHECK(invoke("check --field \"u^2\" --constraint \"u[x,x] = u[x]^3\"").code == 1);

  const Result det = invoke(
      "determine --template \"(a*u[x]^-3 + b*u[x]^-2 + c*u[x]^-1)*u[x,x]\" --unknowns a,b,c "
      "--constraint \"u[x,x] = u[x]^3\"");
  CHECK(det.code == 0);
  CHECK(det.out.find("dimension: 2") != std::string::npos);
  CHECK(det.out.find("free: a b") != std::string::npos);

  const Result red = invoke(
      "reduce --eq \"u[t] - u[x,x]\" --ansatz \"u = phi1 + phi2*x^2\" --functions phi1,phi2");
  CHECK(red.code == 0);
  CHECK(red.out.find("k1: 2") != std::string::npos);

  const Result sol = invoke(
      "solve-reduced --eq \"d(phi1,1) - phi1\" --functions phi1 --init 1 --step 0.001 --rows 1");
  CHECK(sol.code == 0);
  CHECK(sol.out.find("1,2.71828182") != std::string::npos);

  const Result res = invoke(
      "residual --eq \"u[t] - u[x,x]\" --solution \"exp(-k^2*t)*exp(k*x)\" "
      "--at \"x=0.5,t=0.1\" --at \"x=1,t=0.2\" --set k=2 --tol 1e-12");
  CHECK(res.code == 1);
  const Result res_ok = invoke(
      "residual --eq \"u[t] - u[x,x]\" --solution \"exp(k^2*t)*exp(k*x)\" --at \"x=0.5,t=0.1\" --set k=2 --tol 1e-9");
  CHECK(res_ok.code == 0);

  const Result map = invoke("map-solution --field \"u[x]\" --seed \"x^2*t\"");
  CHECK(map.out == "2*x*t\n");
  const Result scen = invoke("reduce --scenario \"" + scenario("utx_family") + "\" --eq pde --ansatz sqrt_family");
  CHECK(scen.code == 0);
  CHECK(scen.out.find("k1: 2") != std::string::npos);
}
