#include <doctest.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>

#include "relucalc/claims.hpp"
#include "relucalc/serialize.hpp"

using namespace relucalc;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
};

// runs the CLI with stderr folded into stdout
Run cli(const std::string& args) {
  const std::string cmd = std::string("\"") + RELUCALC_CLI + "\" " + args + " 2>&1";
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p);
  std::string out;
  char buf[4096];
  size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) out.append(buf, n);
  int status = pclose(p);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("relucalc_cli_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

size_t count_lines(const std::string& s) { return size_t(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST_CASE("index lists and claim lookup") {
  CHECK(parse_index_list("3") == std::vector<size_t>{3});
  CHECK(parse_index_list("1..4") == std::vector<size_t>{1, 2, 3, 4});
  CHECK(parse_index_list("4,6,8") == std::vector<size_t>{4, 6, 8});
  CHECK_THROWS(parse_index_list("x"));
  CHECK_THROWS(parse_index_list("5..2"));

  REQUIRE(claims().size() == 18);
  for (size_t i = 0; i < claims().size(); ++i) {
    CHECK(claims()[i].number == int(i + 1));
    CHECK(find_claim(claims()[i].id) == &claims()[i]);
    CHECK(find_claim(std::to_string(i + 1)) == &claims()[i]);
  }
  CHECK(find_claim("nosuch") == nullptr);
  CHECK(find_claim("19") == nullptr);
}

TEST_CASE("run_claim and reports") {
  ClaimOptions opts;
  opts.n = {2};
  ClaimReport r = run_claim(*find_claim("square-error"), opts);
  CHECK(r.pass);
  CHECK(r.number == 1);
  CHECK_FALSE(r.lines.empty());
  const std::string text = report_text(r, false);
  CHECK(text.rfind("PASS", 0) == 0);
  CHECK(count_lines(text) == 1);
  CHECK(count_lines(report_text(r, true)) == 1 + r.lines.size());

  opts.tolerance = -1.0;
  ClaimReport bad = run_claim(*find_claim("square-error"), opts);
  CHECK_FALSE(bad.pass);
  // failing lines are listed even without details
  CHECK(report_text(bad, false).find("FAIL n=2") != std::string::npos);

  auto j = nlohmann::json::parse(report_json({r, bad}));
  REQUIRE(j["claims"].size() == 2);
  CHECK(j["claims"][0]["id"] == "square-error");
  CHECK(j["claims"][0]["pass"] == true);
  CHECK(j["claims"][1]["pass"] == false);
}

TEST_CASE("cli build and analyze") {
  TempDir tmp;
  Run b = cli("build sawtooth --L 4 --out " + tmp / "s4.net");
  REQUIRE(b.code == 0);
  REQUIRE(fs::exists(tmp / "s4.net"));
  REQUIRE(fs::exists(tmp / "s4.net.manifest.json"));
  auto m = nlohmann::json::parse(slurp(tmp / "s4.net.manifest.json"));
  CHECK(m["construction"] == "sawtooth");
  CHECK(m["width"] == 2);
  CHECK(m["depth"] == 4);
  CHECK(m["mode"] == "exact");
  NetDocument doc = load(tmp / "s4.net");
  CHECK(doc.net.depth() == 4);

  Run a = cli("analyze " + tmp / "s4.net" + " --mode cpwl --csv " + tmp / "s4.csv");
  REQUIRE(a.code == 0);
  CHECK(a.out.find("breakpoints: 15 in (0, 1)") != std::string::npos);
  const std::string csv = slurp(tmp / "s4.csv");
  CHECK(csv.rfind("t,reference,net\n", 0) == 0);

  Run st = cli("analyze " + tmp / "s4.net" + " --mode stats");
  CHECK(st.code == 0);
  CHECK(st.out.find("parameters: " + std::to_string(param_count_formula(1, 1, 2, 4))) != std::string::npos);

  REQUIRE(cli("build shallow --W 5 --d 2 --seed 3 --out " + tmp / "sh.net").code == 0);
  Run rg = cli("analyze " + tmp / "sh.net" + " --mode regions --csv " + tmp / "cells.csv");
  CHECK(rg.code == 0);
  CHECK(rg.out.find("zaslavsky bound: 16") != std::string::npos);
  CHECK(rg.out.find("within bound: yes") != std::string::npos);
  CHECK(slurp(tmp / "cells.csv").rfind("cell,pattern,witness\n", 0) == 0);

  // without --out the net goes to stdout
  Run so = cli("build hat");
  CHECK(so.code == 0);
  CHECK(so.out.find("\"layers\"") != std::string::npos);

  Run fl = cli("build square --n 3 --float --out " + tmp / "sq.net");
  CHECK(fl.code == 0);
  CHECK_FALSE(load(tmp / "sq.net").net.is_exact());
}

TEST_CASE("cli verify and exit codes") {
  Run ok = cli("verify square-error --n 1..3");
  CHECK(ok.code == 0);
  CHECK(ok.out.find("PASS") != std::string::npos);
  Run js = cli("verify 1 --n 2 --json");
  CHECK(js.code == 0);
  auto j = nlohmann::json::parse(js.out);
  CHECK(j["claims"][0]["id"] == "square-error");

  CHECK(cli("verify square-error --n 2 --tolerance -1").code == 1);
  CHECK(cli("verify nosuch").code == 2);
  CHECK(cli("build product --n 0").code == 2);
  CHECK(cli("build nosuch").code == 2);
  CHECK(cli("build").code == 2);
  CHECK(cli("analyze /nonexistent/file.net").code == 2);
  CHECK(cli("frobnicate").code == 2);
}
