#include "relucalc/serialize.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace relucalc {

using nlohmann::json;

namespace {

json num(const Numeric& x) { return x.str(); }

json roles_json(const std::vector<ChannelRole>& roles) {
  json arr = json::array();
  for (const auto& r : roles) {
    json o;
    switch (r.kind) {
      case ChannelRole::Kind::Source:
        o["kind"] = "source";
        o["coordinate"] = r.coordinate + 1;
        break;
      case ChannelRole::Kind::Collation: o["kind"] = "collation"; break;
      case ChannelRole::Kind::Compute: o["kind"] = "compute"; break;
    }
    o["relu_free"] = r.relu_free;
    arr.push_back(o);
  }
  return arr;
}

json doc_json(const ReluNet& net, const std::vector<ChannelRole>* roles, const std::optional<Box>& hint) {
  json j;
  j["version"] = kNetFormatVersion;
  j["d"] = net.input_dim();
  j["d_out"] = net.output_dim();
  j["activation"] = "relu";
  json layers = json::array();
  for (const auto& lp : net.layers()) {
    json W = json::array();
    for (size_t i = 0; i < lp.weights.rows; ++i) {
      json row = json::array();
      for (size_t c = 0; c < lp.weights.cols; ++c) row.push_back(num(lp.weights(i, c)));
      W.push_back(row);
    }
    json b = json::array();
    for (const auto& x : lp.bias) b.push_back(num(x));
    layers.push_back({{"W", W}, {"b", b}});
  }
  j["layers"] = layers;
  if (roles) j["roles"] = roles_json(*roles);
  if (hint) {
    json h = json::array();
    for (const auto& a : hint->axes) h.push_back({num(a.lo), num(a.hi)});
    j["domain_hint"] = h;
  }
  return j;
}

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw FormatError("net file, field '" + where + "': " + what);
}

void only_keys(const json& o, const std::string& where, const std::set<std::string>& allowed) {
  if (!o.is_object()) fail(where, "expected an object");
  for (auto it = o.begin(); it != o.end(); ++it)
    if (!allowed.count(it.key())) fail(where.empty() ? it.key() : where + "." + it.key(), "unknown field");
}

const json& need(const json& o, const std::string& key, const std::string& where) {
  auto it = o.find(key);
  if (it == o.end()) fail(where.empty() ? key : where + "." + key, "missing");
  return *it;
}

Numeric parse_num(const json& v, const std::string& where) {
  if (!v.is_string()) fail(where, "numbers are stored as strings");
  try {
    return Numeric::parse(v.get<std::string>());
  } catch (const std::exception& e) {
    fail(where, e.what());
  }
}

size_t parse_size(const json& v, const std::string& where) {
  if (!v.is_number_unsigned() || v.get<size_t>() == 0) fail(where, "expected a positive integer");
  return v.get<size_t>();
}

std::string line_context(const std::string& text, size_t byte) {
  size_t line = 1, col = 1;
  for (size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace

SpecialNet NetDocument::special() const {
  if (!roles) throw std::logic_error("net document has no channel roles");
  return SpecialNet(net, *roles, domain_hint);
}

std::string to_json_string(const ReluNet& net, const std::optional<Box>& hint) {
  return doc_json(net, nullptr, hint).dump(1);
}

std::string to_json_string(const SpecialNet& net) {
  return doc_json(net.net(), &net.roles(), net.domain_hint()).dump(1);
}

NetDocument from_json_string(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError("net file parse error at " + line_context(text, e.byte > 0 ? e.byte - 1 : 0) + ": " +
                      e.what());
  }
  only_keys(j, "", {"version", "d", "d_out", "activation", "layers", "roles", "domain_hint"});
  const json& ver = need(j, "version", "");
  if (!ver.is_number_integer() || ver.get<int>() != kNetFormatVersion)
    fail("version", "unsupported version " + ver.dump() + " (expected " + std::to_string(kNetFormatVersion) + ")");
  const json& act = need(j, "activation", "");
  if (act != "relu") fail("activation", "only relu is supported");
  size_t d = parse_size(need(j, "d", ""), "d");
  size_t d_out = parse_size(need(j, "d_out", ""), "d_out");
  const json& lj = need(j, "layers", "");
  if (!lj.is_array() || lj.size() < 2) fail("layers", "expected at least two layers");

  std::vector<LayerParams> layers;
  size_t fan_in = d;
  for (size_t l = 0; l < lj.size(); ++l) {
    std::string where = "layers[" + std::to_string(l) + "]";
    only_keys(lj[l], where, {"W", "b"});
    const json& W = need(lj[l], "W", where);
    const json& b = need(lj[l], "b", where);
    if (!W.is_array() || W.empty()) fail(where + ".W", "expected a nonempty matrix");
    if (!b.is_array() || b.size() != W.size()) fail(where + ".b", "length differs from the row count of W");
    LayerParams lp{Matrix(W.size(), fan_in), Vec(W.size())};
    for (size_t r = 0; r < W.size(); ++r) {
      std::string rw = where + ".W[" + std::to_string(r) + "]";
      if (!W[r].is_array() || W[r].size() != fan_in)
        fail(rw, "expected " + std::to_string(fan_in) + " entries");
      for (size_t c = 0; c < fan_in; ++c) lp.weights(r, c) = parse_num(W[r][c], rw + "[" + std::to_string(c) + "]");
      lp.bias[r] = parse_num(b[r], where + ".b[" + std::to_string(r) + "]");
    }
    fan_in = W.size();
    layers.push_back(std::move(lp));
  }
  if (fan_in != d_out) fail("d_out", "does not match the output layer");

  std::optional<Box> hint;
  if (auto it = j.find("domain_hint"); it != j.end()) {
    if (!it->is_array() || it->size() != d) fail("domain_hint", "expected d intervals");
    Box box;
    for (size_t i = 0; i < d; ++i) {
      std::string where = "domain_hint[" + std::to_string(i) + "]";
      const json& iv = (*it)[i];
      if (!iv.is_array() || iv.size() != 2) fail(where, "expected [lo, hi]");
      box.axes.push_back({parse_num(iv[0], where + "[0]"), parse_num(iv[1], where + "[1]")});
    }
    hint = box;
  }

  std::optional<std::vector<ChannelRole>> roles;
  if (auto it = j.find("roles"); it != j.end()) {
    if (!it->is_array()) fail("roles", "expected an array");
    std::vector<ChannelRole> rs;
    for (size_t c = 0; c < it->size(); ++c) {
      std::string where = "roles[" + std::to_string(c) + "]";
      const json& o = (*it)[c];
      only_keys(o, where, {"kind", "coordinate", "relu_free"});
      const json& kind = need(o, "kind", where);
      ChannelRole r;
      if (kind == "source") {
        r.kind = ChannelRole::Kind::Source;
        r.coordinate = parse_size(need(o, "coordinate", where), where + ".coordinate") - 1;
      } else if (kind == "collation") {
        r.kind = ChannelRole::Kind::Collation;
      } else if (kind == "compute") {
        r.kind = ChannelRole::Kind::Compute;
      } else {
        fail(where + ".kind", "unknown channel kind");
      }
      const json& rf = need(o, "relu_free", where);
      if (!rf.is_boolean()) fail(where + ".relu_free", "expected a boolean");
      r.relu_free = rf.get<bool>();
      rs.push_back(r);
    }
    roles = rs;
  }

  try {
    NetDocument doc{ReluNet(d, std::move(layers)), roles, hint};
    if (roles) (void)doc.special();
    return doc;
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("net file: ") + e.what());
  }
}

namespace {
void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << text << "\n";
  if (!f) throw std::runtime_error("write failed for " + path);
}
}  // namespace

void save(const ReluNet& net, const std::string& path) { write_file(path, to_json_string(net)); }

void save(const SpecialNet& net, const std::string& path) { write_file(path, to_json_string(net)); }

NetDocument load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return from_json_string(ss.str());
}

}  // namespace relucalc
