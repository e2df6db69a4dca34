// relucalc command line: build constructions, verify acceptance claims, analyze nets.
// Exit codes: 0 success, 1 verification failure, 2 usage or input error.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "relucalc/analysis.hpp"
#include "relucalc/claims.hpp"
#include "relucalc/constructions_1d.hpp"
#include "relucalc/constructions_multid.hpp"
#include "relucalc/constructions_product.hpp"
#include "relucalc/serialize.hpp"

using namespace relucalc;
using nlohmann::json;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---- build

struct BuildArgs {
  std::string construction;
  std::optional<size_t> L, n, k, d, r, W, m;
  std::string a = "1", eps, f, nu, op = "max", strategy = "tournament", vertex;
  uint64_t seed = 1;
  std::string out;
  bool to_float = false;
};

size_t need(const std::optional<size_t>& v, const char* flag, size_t lo = 1) {
  if (!v) throw UsageError(std::string("missing --") + flag);
  if (*v < lo) throw UsageError(std::string("--") + flag + " must be at least " + std::to_string(lo));
  return *v;
}

std::vector<long> int_list(const std::string& s, const char* flag) {
  std::vector<long> v;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      size_t used = 0;
      v.push_back(std::stol(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError(std::string("--") + flag + ": not an integer list: " + s);
    }
  }
  if (v.empty()) throw UsageError(std::string("--") + flag + " is empty");
  return v;
}

Numeric rand_rat(std::mt19937_64& rng, long lo, long hi, long den) {
  std::uniform_int_distribution<long> u(lo * den, hi * den);
  return Numeric::rational(u(rng), den);
}

struct Built {
  ReluNet net;
  std::optional<Box> domain;
  json params = json::object();
  json contracts = json::object();
};

Built build_construction(const BuildArgs& b) {
  const std::string& c = b.construction;
  std::mt19937_64 rng(b.seed);
  auto result = [](ReluNet net, std::optional<Box> dom) { return Built{std::move(net), std::move(dom)}; };
  if (c == "hat") return result(hat01(), Box::cube(1, 0, 1));
  if (c == "sawtooth") {
    const size_t L = need(b.L, "L");
    Built out = result(sawtooth(L), Box::cube(1, 0, 1));
    out.params["L"] = L;
    out.contracts["interior_breakpoints"] = (1L << L) - 1;
    return out;
  }
  if (c == "square") {
    const size_t n = need(b.n, "n");
    Built out = result(square_net(n), Box::cube(1, 0, 1));
    out.params["n"] = n;
    out.contracts["sup_error_bound"] = (Numeric::rational(1, 3) * Numeric::pow2(-2 * long(n))).str();
    return out;
  }
  if (c == "product") {
    const size_t n = need(b.n, "n");
    Built out = result(product_net(n), Box::cube(2, 0, 1));
    out.params["n"] = n;
    out.contracts["sup_error_bound"] = Numeric::pow2(-2 * long(n)).str();
    return out;
  }
  if (c == "kproduct") {
    const size_t k = need(b.k, "k", 2), n = need(b.n, "n");
    const Numeric a = Numeric::parse(b.a);
    if (!(a.sign() > 0)) throw UsageError("--a must be positive");
    Built out = result(kproduct_net(k, n, a), Box::cube(k, 0, a));
    out.params = {{"k", k}, {"n", n}, {"a", a.str()}};
    return out;
  }
  if (c == "monomial") {
    if (b.nu.empty()) throw UsageError("missing --nu");
    const size_t n = need(b.n, "n");
    MultiIndex nu;
    for (long e : int_list(b.nu, "nu")) {
      if (e < 0) throw UsageError("--nu entries must be nonnegative");
      nu.nu.push_back(size_t(e));
    }
    Built out = result(monomial_net(nu, n), Box::cube(nu.dim(), 0, 1));
    out.params = {{"nu", nu.nu}, {"n", n}};
    return out;
  }
  if (c == "bitextract") {
    const size_t n = need(b.n, "n", 2);
    std::vector<int> eps;
    if (b.eps.empty()) {
      for (size_t j = 0; j < n; ++j) {
        std::vector<int> blk(n / 2, 1);
        blk.resize(n, -1);
        std::shuffle(blk.begin(), blk.end(), rng);
        eps.insert(eps.end(), blk.begin(), blk.end());
      }
    } else {
      for (char ch : b.eps) {
        if (ch != '+' && ch != '-') throw UsageError("--eps takes a string of + and -");
        eps.push_back(ch == '+' ? 1 : -1);
      }
    }
    BitExtractPlan plan;
    try {
      plan = BitExtractPlan::from_signs(n, eps);
    } catch (const std::invalid_argument& e) {
      throw UsageError(std::string("--eps: ") + e.what());
    }
    Built out = result(bit_extract_net(plan), Box::cube(1, 0, 1));
    std::string signs;
    for (int e : plan.eps) signs += e > 0 ? '+' : '-';
    out.params = {{"n", n}, {"eps", signs}};
    out.contracts = {{"width", 11}, {"max_depth", 15 * n + 2}, {"nodes", plan.y}, {"max_deviation", 1}};
    return out;
  }
  if (c == "yarotsky") {
    const size_t n = need(b.n, "n", 2);
    ScalarOracle f;
    if (b.f == "abs-mid")
      f = [](const Numeric& t) { return abs(t - Numeric::rational(1, 2)); };
    else if (b.f == "tent")
      f = [](const Numeric& t) { return min(t, Numeric(1) - t); };
    else
      throw UsageError("--f must be abs-mid or tent");
    Built out = result(yarotsky_approx(f, n), Box::cube(1, 0, 1));
    out.params = {{"f", b.f}, {"n", n}};
    out.contracts = {{"width", 11}, {"max_depth", 16 * n + 2}, {"sup_error_bound", 6.0 / double(n * n)}};
    return out;
  }
  if (c == "bspline") {
    const size_t r = need(b.r, "r"), d = need(b.d, "d"), n = need(b.n, "n");
    Built out = result(bspline_net(r, d, n), Box::cube(d, 0, long(r)));
    out.params = {{"r", r}, {"d", d}, {"n", n}};
    return out;
  }
  if (c == "minmax") {
    const size_t m = need(b.m, "m"), d = need(b.d, "d");
    MinMax op;
    if (b.op == "min")
      op = MinMax::Min;
    else if (b.op == "max")
      op = MinMax::Max;
    else
      throw UsageError("--op must be min or max");
    MinMaxStrategy st;
    if (b.strategy == "tournament")
      st = MinMaxStrategy::Tournament;
    else if (b.strategy == "recursive")
      st = MinMaxStrategy::Recursive;
    else
      throw UsageError("--strategy must be tournament or recursive");
    AffineFamily fam;
    for (size_t j = 0; j < m; ++j) {
      AffineFunction g;
      for (size_t i = 0; i < d; ++i) g.w.push_back(rand_rat(rng, -1, 1, 16));
      g.b = rand_rat(rng, -1, 1, 16);
      fam.members.push_back(g);
    }
    const Box box = Box::cube(d, 0, 1);
    Built out = result(minmax_affine(fam, op, st, false, box), box);
    out.params = {{"m", m}, {"d", d}, {"op", b.op}, {"strategy", b.strategy}, {"seed", b.seed}};
    return out;
  }
  if (c == "fem") {
    const size_t d = need(b.d, "d"), n = need(b.n, "n");
    KuhnGrid grid{d, n};
    Built out = [&] {
      if (!b.vertex.empty()) {
        std::vector<long> v = int_list(b.vertex, "vertex");
        if (v.size() != d) throw UsageError("--vertex needs d coordinates");
        for (long x : v)
          if (x < 0 || x > long(n)) throw UsageError("--vertex outside the grid");
        Built o = result(fem_basis_net(grid, v), Box::cube(d, 0, 1));
        o.params["vertex"] = v;
        return o;
      }
      Vec values;
      json vals = json::array();
      for (size_t i = 0; i < grid.vertex_count(); ++i) {
        values.push_back(rand_rat(rng, -2, 2, 8));
        vals.push_back(values.back().str());
      }
      Built o = result(fem_combination(grid, values), Box::cube(d, 0, 1));
      o.params["values"] = vals;
      o.params["seed"] = b.seed;
      return o;
    }();
    out.params["d"] = d;
    out.params["n"] = n;
    return out;
  }
  if (c == "shallow") {
    // random one-hidden-layer net with small rational parameters
    const size_t W = need(b.W, "W"), d = need(b.d, "d");
    LayerParams hidden{Matrix(W, d), Vec(W)}, output{Matrix(1, W), Vec(1)};
    for (auto& v : hidden.weights.a) v = rand_rat(rng, -1, 1, 64);
    for (auto& v : hidden.bias) v = rand_rat(rng, -1, 1, 64);
    for (auto& v : output.weights.a) v = rand_rat(rng, -1, 1, 64);
    Built out = result(ReluNet(d, {hidden, output}), Box::cube(d, -1, 1));
    out.params = {{"W", W}, {"d", d}, {"seed", b.seed}};
    out.contracts["cells_at_most"] = zaslavsky_bound(W, d);
    return out;
  }
  throw UsageError("unknown construction: " + c);
}

int cmd_build(const BuildArgs& b) {
  Built built = build_construction(b);
  ReluNet net = b.to_float ? to_mode(built.net, Mode::Float) : built.net;
  const NetStats st = stats(net);
  json manifest{{"construction", b.construction},
                {"parameters", built.params},
                {"mode", b.to_float ? "float" : "exact"},
                {"d", net.input_dim()},
                {"d_out", net.output_dim()},
                {"width", st.width},
                {"depth", st.depth},
                {"parameters_count", st.param_count},
                {"contracts", built.contracts}};
  if (b.out.empty()) {
    std::cout << to_json_string(net, built.domain) << "\n";
    std::cerr << manifest.dump(2) << "\n";
    return 0;
  }
  save(net, b.out);
  const std::string mpath = b.out + ".manifest.json";
  std::ofstream mf(mpath);
  if (!(mf << manifest.dump(2) << "\n")) throw std::runtime_error("cannot write " + mpath);
  std::cout << b.construction << ": W=" << st.width << " L=" << st.depth << " params=" << st.param_count << " -> "
            << b.out << " (+ " << mpath << ")\n";
  return 0;
}

// ---- verify

struct VerifyArgs {
  std::vector<std::string> ids;
  bool all = false;
  std::string n;
  std::string f;
  size_t grid = 0;
  std::optional<double> tolerance;
  uint64_t seed = 1;
  bool json_out = false, exact = false, to_float = false, details = false;
  size_t jobs = 0;
};

int cmd_verify(const VerifyArgs& v) {
  std::vector<const Claim*> which;
  if (v.all) {
    if (!v.ids.empty()) throw UsageError("give claim ids or --all, not both");
    for (const auto& c : claims()) which.push_back(&c);
  } else {
    if (v.ids.empty()) throw UsageError("no claim given (use an id, a number or --all)");
    for (const auto& id : v.ids) {
      const Claim* c = find_claim(id);
      if (!c) throw UsageError("unknown claim: " + id);
      which.push_back(c);
    }
  }
  if (v.exact && v.to_float) throw UsageError("--exact and --float are exclusive");
  ClaimOptions opts;
  if (!v.n.empty()) {
    try {
      opts.n = parse_index_list(v.n);
    } catch (const std::exception&) {
      throw UsageError("--n: expected 3, 1..8 or 4,6,8");
    }
  }
  opts.f = v.f;
  opts.grid = v.grid;
  opts.tolerance = v.tolerance;
  opts.seed = v.seed;
  if (v.exact) opts.mode = Mode::Exact;
  if (v.to_float) opts.mode = Mode::Float;

  const auto reports = run_claims(which, opts, v.jobs);
  bool all = true;
  for (const auto& r : reports) all = all && r.pass;
  if (v.json_out) {
    std::cout << report_json(reports) << "\n";
  } else {
    for (const auto& r : reports) std::cout << report_text(r, v.details);
  }
  return all ? 0 : 1;
}

// ---- analyze

struct AnalyzeArgs {
  std::string file;
  std::string mode = "stats";
  std::string csv;
  std::string lo, hi;
  size_t grid = 256;
  size_t samples = 10000;
  uint64_t seed = 1;
};

Interval window_for(const AnalyzeArgs& a, const NetDocument& doc) {
  Interval w{0, 1};
  if (doc.domain_hint && doc.domain_hint->bounded()) w = doc.domain_hint->axes[0];
  if (!a.lo.empty()) w.lo = Numeric::parse(a.lo);
  if (!a.hi.empty()) w.hi = Numeric::parse(a.hi);
  if (!(w.lo < w.hi)) throw UsageError("empty window");
  return w;
}

std::ofstream open_csv(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw UsageError("cannot write " + path);
  return os;
}

int analyze_cpwl(const AnalyzeArgs& a, const NetDocument& doc) {
  const ReluNet& net = doc.net;
  if (net.input_dim() != 1 || net.output_dim() != 1) throw UsageError("cpwl mode needs a net R -> R");
  const Interval w = window_for(a, doc);
  const ReluNet exact = to_mode(net, Mode::Exact);
  Cpwl1D f = doc.is_special() ? exact_cpwl_1d(SpecialNet(exact, *doc.roles, doc.domain_hint), w)
                              : exact_cpwl_1d(exact, w);
  Vec inner;
  for (const auto& t : f.kinks())
    if (w.lo < t && t < w.hi) inner.push_back(t);
  std::cout << "breakpoints: " << inner.size() << " in (" << w.lo.str() << ", " << w.hi.str() << ")\n";
  std::cout << "t\tvalue\n";
  for (const auto& t : inner) std::cout << t.str() << "\t" << f(t).str() << "\n";
  if (!a.csv.empty()) {
    auto os = open_csv(a.csv);
    FloatEvaluator fe = doc.is_special() ? FloatEvaluator(SpecialNet(net, *doc.roles)) : FloatEvaluator(net);
    os << "t,reference,net\n";
    os.precision(17);
    const size_t g = std::max<size_t>(a.grid, 1);
    for (size_t i = 0; i <= g; ++i) {
      Numeric t = w.lo + (w.hi - w.lo) * Numeric::rational(long(i), long(g));
      os << t.to_double() << "," << f(t).to_double() << "," << fe.scalar(t.to_double()) << "\n";
    }
  }
  return 0;
}

int analyze_regions(const AnalyzeArgs& a, const NetDocument& doc) {
  const ReluNet net = to_mode(doc.net, Mode::Exact);
  const ArrangementCellReport cells = arrangement_cells(first_layer_hyperplanes(net));
  std::cout << "first layer: " << cells.W << " hyperplanes in R^" << cells.d << "\n";
  std::cout << "cells: " << cells.cell_count << "\n";
  std::cout << "zaslavsky bound: " << cells.zaslavsky_bound << "\n";
  std::cout << "general position: " << (cells.in_general_position ? "yes" : "no") << "\n";
  std::cout << "within bound: " << (cells.cell_count <= cells.zaslavsky_bound ? "yes" : "no") << "\n";
  const Box dom = doc.domain_hint && doc.domain_hint->bounded() ? *doc.domain_hint : Box::cube(net.input_dim(), -1, 1);
  const RegionCensus census = region_census(net, dom, a.samples, a.seed);
  std::cout << "activation patterns on the domain: " << census.distinct_patterns << " from " << census.samples
            << " samples\n";
  if (!a.csv.empty()) {
    auto os = open_csv(a.csv);
    os << "cell,pattern,witness\n";
    for (size_t i = 0; i < cells.cells.size(); ++i) {
      const auto& [pat, pt] = cells.cells[i];
      std::string p, x;
      for (auto s : pat) p += s > 0 ? '+' : (s < 0 ? '-' : '0');
      for (size_t j = 0; j < pt.size(); ++j) x += (j ? " " : "") + pt[j].str();
      os << i << "," << p << "," << x << "\n";
    }
  }
  return cells.cell_count <= cells.zaslavsky_bound ? 0 : 1;
}

int analyze_stats(const AnalyzeArgs& a, const NetDocument& doc) {
  const NetStats st = stats(doc.net);
  std::vector<std::pair<std::string, std::string>> rows{
      {"d", std::to_string(doc.net.input_dim())},
      {"d_out", std::to_string(doc.net.output_dim())},
      {"width", std::to_string(st.width)},
      {"depth", std::to_string(st.depth)},
      {"parameters", std::to_string(st.param_count)},
      {"exact", doc.net.is_exact() ? "yes" : "no"},
      {"special", doc.is_special() ? "yes" : "no"}};
  std::string widths;
  for (size_t l = 0; l < doc.net.depth(); ++l) widths += (l ? " " : "") + std::to_string(doc.net.layer_width(l));
  rows.push_back({"layer_widths", widths});
  for (const auto& [k, v] : rows) std::cout << k << ": " << v << "\n";
  if (!a.csv.empty()) {
    auto os = open_csv(a.csv);
    os << "key,value\n";
    for (const auto& [k, v] : rows) os << k << "," << v << "\n";
  }
  return 0;
}

int cmd_analyze(const AnalyzeArgs& a) {
  NetDocument doc = [&] {
    try {
      return load(a.file);
    } catch (const std::exception& e) {
      throw UsageError(a.file + ": " + e.what());
    }
  }();
  if (a.mode == "cpwl") return analyze_cpwl(a, doc);
  if (a.mode == "regions") return analyze_regions(a, doc);
  if (a.mode == "stats") return analyze_stats(a, doc);
  throw UsageError("unknown mode: " + a.mode);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ReLU network constructions, verification and analysis"};
  app.require_subcommand(1);

  BuildArgs b;
  auto* build = app.add_subcommand("build", "build a construction and write it with a manifest");
  build->add_option("construction", b.construction,
                    "hat | sawtooth | square | product | kproduct | monomial | bitextract | yarotsky | bspline | "
                    "minmax | fem | shallow")
      ->required();
  build->add_option("--L", b.L, "sawtooth depth");
  build->add_option("--n", b.n, "accuracy level, grid size or bit count");
  build->add_option("--k", b.k, "number of factors");
  build->add_option("--a", b.a, "kproduct domain [0, a]^k");
  build->add_option("--d", b.d, "input dimension");
  build->add_option("--r", b.r, "B-spline order");
  build->add_option("--W", b.W, "width of a shallow net");
  build->add_option("--m", b.m, "number of affine pieces");
  build->add_option("--eps", b.eps, "bit-extraction signs, e.g. +-+-...");
  build->add_option("--f", b.f, "target for yarotsky: abs-mid | tent");
  build->add_option("--nu", b.nu, "monomial exponents, e.g. 2,1");
  build->add_option("--op", b.op, "min | max");
  build->add_option("--strategy", b.strategy, "tournament | recursive");
  build->add_option("--vertex", b.vertex, "FEM nodal basis at this lattice vertex, e.g. 1,2");
  build->add_option("--seed", b.seed, "seed for random parameters");
  build->add_option("--out", b.out, "net file (manifest goes to <out>.manifest.json)");
  auto* bexact = build->add_flag("--exact", "store exact rationals (default)");
  build->add_flag("--float", b.to_float, "store doubles")->excludes(bexact);

  VerifyArgs v;
  auto* verify = app.add_subcommand("verify", "run acceptance claims");
  verify->add_option("claims", v.ids, "claim ids or numbers");
  verify->add_flag("--all", v.all, "run every claim");
  verify->add_option("--n", v.n, "parameter list: 3, 1..8 or 4,6,8");
  verify->add_option("--f", v.f, "function filter for claims with several targets");
  verify->add_option("--grid", v.grid, "grid resolution or sample count");
  verify->add_option("--tolerance", v.tolerance, "additive slack on every bound");
  verify->add_option("--seed", v.seed, "random seed");
  verify->add_option("--jobs", v.jobs, "worker threads (0: hardware concurrency)");
  verify->add_flag("--json", v.json_out, "machine-readable report");
  verify->add_flag("--exact", v.exact, "exact arithmetic where a claim offers a choice");
  verify->add_flag("--float", v.to_float, "double arithmetic where a claim offers a choice");
  verify->add_flag("-v,--details", v.details, "print every measurement line");

  AnalyzeArgs a;
  auto* analyze = app.add_subcommand("analyze", "inspect a net file");
  analyze->add_option("file", a.file, "net file")->required();
  analyze->add_option("--mode", a.mode, "cpwl | regions | stats");
  analyze->add_option("--csv", a.csv, "write plot data to this CSV file");
  analyze->add_option("--lo", a.lo, "cpwl window start (default: domain hint or 0)");
  analyze->add_option("--hi", a.hi, "cpwl window end (default: domain hint or 1)");
  analyze->add_option("--grid", a.grid, "CSV grid intervals in cpwl mode");
  analyze->add_option("--samples", a.samples, "activation census samples in regions mode");
  analyze->add_option("--seed", a.seed, "census seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*build) return cmd_build(b);
    if (*verify) return cmd_verify(v);
    if (*analyze) return cmd_analyze(a);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
