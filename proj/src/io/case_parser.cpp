#include "mfopf/io.hpp"

#include <fmt/format.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

namespace mfopf {

namespace {

struct Row {
  std::vector<double> values;
  int line;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_number(const std::string& token, int line) {
  char* end = nullptr;
  const double v = std::strtod(token.c_str(), &end);
  if (end == token.c_str() || *end != '\0')
    throw DataError(fmt::format("line {}: malformed number '{}'", line, token));
  return v;
}

std::vector<double> parse_row(const std::string& text, int line) {
  std::vector<double> out;
  std::string token;
  std::istringstream in(text);
  while (in >> token) {
    // Commas are optional separators in the matrix syntax.
    std::size_t start = 0;
    while (start <= token.size()) {
      const auto comma = token.find(',', start);
      const std::string piece = token.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      if (!piece.empty()) out.push_back(parse_number(piece, line));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
  }
  return out;
}

// Splits the document into named matrices and scalars.
struct RawCase {
  std::map<std::string, std::vector<Row>> matrices;
  std::map<std::string, std::pair<double, int>> scalars;
};

RawCase scan(const std::string& text) {
  RawCase raw;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  std::string matrix;  // name of the matrix being read
  bool in_cell = false;
  while (std::getline(in, line)) {
    ++number;
    if (const auto pct = line.find('%'); pct != std::string::npos) line.erase(pct);
    std::string body = line;
    if (in_cell) {
      if (body.find('}') != std::string::npos) in_cell = false;
      continue;
    }
    if (matrix.empty()) {
      const auto pos = body.find("mpc.");
      if (pos == std::string::npos) continue;
      const auto eq = body.find('=', pos);
      if (eq == std::string::npos) continue;
      const std::string name = trim(body.substr(pos + 4, eq - pos - 4));
      std::string rest = trim(body.substr(eq + 1));
      if (!rest.empty() && (rest.front() == '\'' || rest.front() == '"')) continue;  // string scalar
      if (!rest.empty() && rest.front() == '{') {
        in_cell = rest.find('}') == std::string::npos;
        continue;
      }
      if (!rest.empty() && rest.front() == '[') {
        matrix = name;
        raw.matrices[matrix];
        body = rest.substr(1);
      } else {
        if (const auto semi = rest.find(';'); semi != std::string::npos) rest.erase(semi);
        rest = trim(rest);
        if (!rest.empty()) raw.scalars[name] = {parse_number(rest, number), number};
        continue;
      }
    }
    bool closes = false;
    if (const auto close = body.find(']'); close != std::string::npos) {
      body.erase(close);
      closes = true;
    }
    std::size_t start = 0;
    while (start <= body.size()) {
      const auto semi = body.find(';', start);
      const std::string segment = body.substr(start, semi == std::string::npos ? std::string::npos : semi - start);
      auto values = parse_row(segment, number);
      if (!values.empty()) raw.matrices[matrix].push_back({std::move(values), number});
      if (semi == std::string::npos) break;
      start = semi + 1;
    }
    if (closes) matrix.clear();
  }
  if (!matrix.empty()) throw DataError(fmt::format("matrix mpc.{} is not closed", matrix));
  return raw;
}

const std::vector<Row>& table(const RawCase& raw, const std::string& name, std::size_t min_cols, bool required) {
  static const std::vector<Row> empty;
  auto it = raw.matrices.find(name);
  if (it == raw.matrices.end()) {
    if (required) throw DataError(fmt::format("case has no mpc.{} table", name));
    return empty;
  }
  std::size_t width = 0;
  for (const Row& r : it->second) {
    if (r.values.size() < min_cols)
      throw DataError(fmt::format("line {}: mpc.{} row has {} columns, expected at least {}", r.line, name,
                                  r.values.size(), min_cols));
    if (width == 0) width = r.values.size();
    if (r.values.size() != width && name != "gencost")
      throw DataError(fmt::format("line {}: mpc.{} row has {} columns, previous rows have {}", r.line, name,
                                  r.values.size(), width));
  }
  return it->second;
}

int as_int(double v, int line) {
  if (v != std::floor(v)) throw DataError(fmt::format("line {}: expected an integer, got {}", line, v));
  return static_cast<int>(v);
}

}  // namespace

CaseDocument parse_case(const std::string& text) {
  const RawCase raw = scan(text);
  CaseDocument doc;
  if (auto it = raw.scalars.find("baseMVA"); it != raw.scalars.end()) {
    doc.base_mva = it->second.first;
    if (!(doc.base_mva > 0.0)) throw DataError(fmt::format("line {}: baseMVA must be positive", it->second.second));
  }
  for (const Row& r : table(raw, "bus", 13, true)) {
    const auto& v = r.values;
    doc.buses.push_back({as_int(v[0], r.line), as_int(v[1], r.line), v[2], v[3], v[4], v[5], v[11], v[12], v[9],
                         r.line});
  }
  for (const Row& r : table(raw, "gen", 10, true)) {
    const auto& v = r.values;
    doc.generators.push_back({as_int(v[0], r.line), v[3], v[4], as_int(v[7], r.line), v[8], v[9], r.line});
  }
  for (const Row& r : table(raw, "branch", 11, true)) {
    const auto& v = r.values;
    CaseDocument::BranchRow b{as_int(v[0], r.line), as_int(v[1], r.line), v[2], v[3], v[4], v[5], v[8], v[9],
                              as_int(v[10], r.line), std::nullopt, std::nullopt, r.line};
    if (b.rate_a < 0.0) throw DataError(fmt::format("line {}: negative branch rating", r.line));
    if (v.size() >= 13) {
      b.angmin = v[11];
      b.angmax = v[12];
    }
    doc.branches.push_back(b);
  }
  for (const Row& r : table(raw, "gencost", 4, false)) {
    const auto& v = r.values;
    const int model = as_int(v[0], r.line);
    if (model != 1 && model != 2)
      throw DataError(fmt::format("line {}: unsupported cost model {} (expected 1 or 2)", r.line, model));
    const int n = as_int(v[3], r.line);
    const std::size_t need = 4 + static_cast<std::size_t>(model == 1 ? 2 * n : n);
    if (n < 0 || v.size() < need)
      throw DataError(fmt::format("line {}: gencost row needs {} columns for n = {}", r.line, need, n));
    doc.costs.push_back({model, std::vector<double>(v.begin() + 4, v.begin() + static_cast<long>(need)), r.line});
  }
  return doc;
}

CaseDocument load_case(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("cannot read case file {}", path.string()));
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_case(buf.str());
}

PrimitiveNetwork derive_primitives(const CaseDocument& doc, double omega_base) {
  if (!(omega_base > 0.0)) throw DataError("base frequency must be positive");
  PrimitiveNetwork net;
  net.base_mva = doc.base_mva;
  net.base_omega = omega_base;
  const double s = doc.base_mva;

  for (const auto& row : doc.buses) {
    Bus bus;
    bus.id = row.id;
    bus.v_min = row.vmin;
    bus.v_max = row.vmax;
    bus.p_load = row.pd / s;
    bus.q_load = row.qd / s;
    bus.g_shunt = row.gs / s;
    bus.base_kv = row.base_kv;
    const double b = row.bs / s;
    if (b > 0.0) bus.shunt = ShuntElement{ShuntElement::Kind::Capacitive, b / omega_base};
    if (b < 0.0) bus.shunt = ShuntElement{ShuntElement::Kind::Inductive, 1.0 / (omega_base * -b)};
    if (row.type == 3 && !net.reference_bus) net.reference_bus = row.id;
    net.buses.push_back(bus);
  }

  int branch_id = 0;
  for (const auto& row : doc.branches) {
    Branch br;
    br.id = ++branch_id;
    br.from_bus = row.from;
    br.to_bus = row.to;
    br.r = row.r;
    br.l = row.x / omega_base;
    br.c_shunt = row.b / omega_base;
    br.tap = row.ratio == 0.0 ? 1.0 : row.ratio;
    br.kind = row.ratio == 0.0 && row.angle == 0.0 ? BranchKind::AcLine : BranchKind::Transformer;
    br.shift = row.angle * std::numbers::pi / 180.0;
    br.in_service = row.status > 0;
    if (row.rate_a == 0.0) {
      br.s_max = kUnlimitedRating;
      net.warnings.push_back(
          fmt::format("branch {} (line {}): rating 0 treated as unlimited ({} pu)", br.id, row.line, kUnlimitedRating));
    } else {
      br.s_max = row.rate_a / s;
    }
    br.angle_max = kDefaultAngleLimit;
    if (row.angmin && row.angmax) {
      const bool unset_min = *row.angmin == 0.0 || *row.angmin <= -360.0;
      const bool unset_max = *row.angmax == 0.0 || *row.angmax >= 360.0;
      double deg = 360.0;
      if (!unset_min) deg = std::min(deg, std::abs(*row.angmin));
      if (!unset_max) deg = std::min(deg, std::abs(*row.angmax));
      if (deg < 360.0) {
        if (deg > 90.0) {
          net.warnings.push_back(fmt::format("branch {} (line {}): angle limit {} deg clipped to 90 deg", br.id,
                                             row.line, deg));
          deg = 90.0;
        }
        br.angle_max = deg * std::numbers::pi / 180.0;
      }
    }
    net.branches.push_back(br);
  }

  int gen_id = 0;
  for (const auto& row : doc.generators) {
    Generator g;
    g.id = ++gen_id;
    g.bus = row.bus;
    g.p_min = row.pmin / s;
    g.p_max = row.pmax / s;
    g.q_min = row.qmin / s;
    g.q_max = row.qmax / s;
    g.in_service = row.status > 0;
    const std::size_t k = static_cast<std::size_t>(gen_id - 1);
    if (k < doc.costs.size()) {
      const auto& c = doc.costs[k];
      if (c.model == 2) {
        // Descending coefficients in MW; rescale to ascending per-unit powers.
        PolynomialCost poly;
        const std::size_t n = c.params.size();
        for (std::size_t p = 0; p < n; ++p) poly.coefficients.push_back(c.params[n - 1 - p] * std::pow(s, p));
        while (poly.coefficients.size() > 1 && poly.coefficients.back() == 0.0) poly.coefficients.pop_back();
        g.cost = poly;
      } else {
        PiecewiseLinearCost pwl;
        for (std::size_t p = 0; p + 1 < c.params.size(); p += 2) pwl.points.emplace_back(c.params[p] / s, c.params[p + 1]);
        g.cost = pwl;
      }
    } else {
      net.warnings.push_back(fmt::format("generator {} has no cost row; zero cost assumed", g.id));
    }
    net.generators.push_back(g);
  }
  return net;
}

}  // namespace mfopf
