#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <sstream>
#include <unordered_map>

#include "degrade/encode.hpp"

namespace degrade {

namespace {

std::string num(double v) {
  if (std::isinf(v)) return v > 0 ? "+inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

const char* sense_text(Sense s) {
  switch (s) {
    case Sense::LessEqual: return "<=";
    case Sense::GreaterEqual: return ">=";
    case Sense::Equal: return "=";
  }
  return "=";
}

void write_terms(std::ostringstream& os, const MilpModel& m, const std::vector<Term>& terms) {
  int on_line = 0;
  for (const auto& t : terms) {
    if (on_line == 8) {
      os << "\n   ";
      on_line = 0;
    }
    os << (t.coef < 0 ? " - " : " + ") << num(std::abs(t.coef)) << ' '
       << m.variables.at(t.var).name;
    ++on_line;
  }
}

}  // namespace

std::string export_lp(const MilpModel& m) {
  std::ostringstream os;
  os << "\\ heading-change conflict resolution model\n";
  os << "\\ big_m " << num(m.big_m) << '\n';
  os << "\\ frame_rotation " << num(m.map.frame_rotation) << '\n';
  for (std::size_t k = 0; k < m.map.heading_var.size(); ++k) {
    os << "\\ aircraft " << m.variables.at(m.map.heading_var[k]).name << ' '
       << m.variables.at(m.map.deviation_var[k]).name << ' '
       << num(m.map.initial_heading.at(k)) << '\n';
  }
  for (const auto& p : m.map.pairs) {
    os << "\\ pair " << p.lead + 1 << ' ' << p.trail + 1 << ' '
       << m.variables.at(p.alpha).name << '\n';
  }

  os << "Minimize\n obj:";
  std::vector<Term> obj;
  for (std::size_t k = 0; k < m.objective.size(); ++k)
    if (m.objective[k] != 0.0) obj.push_back(Term{static_cast<int>(k), m.objective[k]});
  write_terms(os, m, obj);
  os << '\n';

  if (!m.rows.empty()) {
    os << "Subject To\n";
    for (const auto& r : m.rows) {
      os << ' ' << r.name << ':';
      write_terms(os, m, r.terms);
      os << ' ' << sense_text(r.sense) << ' ' << num(r.rhs) << '\n';
    }
  }

  os << "Bounds\n";
  for (const auto& v : m.variables) {
    const bool lo_inf = std::isinf(v.lower);
    const bool hi_inf = std::isinf(v.upper);
    if (lo_inf && hi_inf) os << ' ' << v.name << " free\n";
    else if (v.lower == v.upper) os << ' ' << v.name << " = " << num(v.lower) << '\n';
    else if (hi_inf) os << ' ' << v.name << " >= " << num(v.lower) << '\n';
    else os << ' ' << num(v.lower) << " <= " << v.name << " <= " << num(v.upper) << '\n';
  }

  bool any_binary = false;
  for (const auto& v : m.variables) {
    if (v.type != VarType::Binary) continue;
    if (!any_binary) os << "Binary\n";
    any_binary = true;
    os << ' ' << v.name << '\n';
  }
  os << "End\n";
  return os.str();
}

ParseError::ParseError(const std::string& msg, int line, int column)
    : std::runtime_error("line " + std::to_string(line) + ", column " +
                         std::to_string(column) + ": " + msg),
      line_(line),
      column_(column) {}

namespace {

enum class TokKind { Name, Number, Plus, Minus, Colon, Le, Ge, Eq, End };

struct Token {
  TokKind kind = TokKind::End;
  std::string text;
  double value = 0.0;
  int line = 0;
  int column = 0;
};

bool name_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '!' ||
         c == '"' || c == '#' || c == '$' || c == '%' || c == '&' || c == '(' || c == ')' ||
         c == ',' || c == ';' || c == '?' || c == '@' || c == '{' || c == '}' || c == '~' ||
         c == '\'' || c == '`' || c == '|';
}

bool name_char(char c) {
  return name_start(c) || std::isdigit(static_cast<unsigned char>(c));
}

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

enum class Section { None, Objective, Constraints, Bounds, Binary, End };

struct Reference {
  std::string name;
  int line;
  int column;
};

struct RawRow {
  std::string name;
  std::vector<std::pair<Reference, double>> terms;
  Sense sense;
  double rhs;
};

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  MilpModel run();

 private:
  std::vector<Token> tokenize_line(std::string_view line, int lineno);
  void parse_meta(std::string_view comment, int lineno);
  void handle_objective(const std::vector<Token>& toks);
  void handle_constraint(const std::vector<Token>& toks);
  void handle_bound(const std::vector<Token>& toks);
  void handle_binary(const std::vector<Token>& toks);
  int declare(const std::string& name);
  [[noreturn]] void fail(const std::string& msg, int line, int col) {
    throw ParseError(msg, line, col);
  }

  std::string_view text_;
  Section section_ = Section::None;
  std::vector<Token> pending_;  // a constraint may span lines
  std::vector<Variable> vars_;
  std::unordered_map<std::string, int> index_;
  std::vector<std::pair<Reference, double>> objective_;
  std::vector<RawRow> rows_;
  double big_m_ = 50.0;
  double rotation_ = 0.0;
  struct AircraftMeta {
    std::string theta, dev;
    double h0;
  };
  std::vector<AircraftMeta> aircraft_;
  struct PairMeta {
    int lead, trail;
    std::string alpha;
  };
  std::vector<PairMeta> pairs_;
};

std::vector<Token> Parser::tokenize_line(std::string_view line, int lineno) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    const char c = line[i];
    const int col = static_cast<int>(i) + 1;
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (c == '\\') break;
    Token t;
    t.line = lineno;
    t.column = col;
    if (c == '+' || c == '-') {
      t.kind = (c == '+') ? TokKind::Plus : TokKind::Minus;
      t.text = std::string(1, c);
      ++i;
    } else if (c == ':') {
      t.kind = TokKind::Colon;
      ++i;
    } else if (c == '<' || c == '>' || c == '=') {
      std::size_t j = i + 1;
      if (j < line.size() && (line[j] == '=' || line[j] == '<' || line[j] == '>')) ++j;
      const std::string op(line.substr(i, j - i));
      if (op == "<=" || op == "=<" || op == "<") t.kind = TokKind::Le;
      else if (op == ">=" || op == "=>" || op == ">") t.kind = TokKind::Ge;
      else if (op == "=") t.kind = TokKind::Eq;
      else fail("unknown operator '" + op + "'", lineno, col);
      i = j;
    } else if (std::isdigit(static_cast<unsigned char>(c)) ||
               (c == '.' && i + 1 < line.size() &&
                std::isdigit(static_cast<unsigned char>(line[i + 1])))) {
      std::size_t j = i;
      while (j < line.size() && (std::isdigit(static_cast<unsigned char>(line[j])) ||
                                 line[j] == '.'))
        ++j;
      if (j < line.size() && (line[j] == 'e' || line[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < line.size() && (line[k] == '+' || line[k] == '-')) ++k;
        if (k < line.size() && std::isdigit(static_cast<unsigned char>(line[k]))) {
          j = k;
          while (j < line.size() && std::isdigit(static_cast<unsigned char>(line[j]))) ++j;
        }
      }
      const std::string s(line.substr(i, j - i));
      char* end = nullptr;
      t.value = std::strtod(s.c_str(), &end);
      if (end != s.c_str() + s.size()) fail("malformed number '" + s + "'", lineno, col);
      t.kind = TokKind::Number;
      t.text = s;
      i = j;
    } else if (name_start(c)) {
      std::size_t j = i;
      while (j < line.size() && name_char(line[j])) ++j;
      t.text = std::string(line.substr(i, j - i));
      const std::string l = lower(t.text);
      if (l == "inf" || l == "infinity") {
        t.kind = TokKind::Number;
        t.value = INFINITY;
      } else {
        t.kind = TokKind::Name;
      }
      i = j;
    } else {
      fail(std::string("unexpected character '") + c + "'", lineno, col);
    }
    out.push_back(std::move(t));
  }
  return out;
}

void Parser::parse_meta(std::string_view comment, int lineno) {
  std::istringstream is{std::string(comment)};
  std::string key;
  is >> key;
  auto bad = [&] { fail("malformed metadata comment '" + key + "'", lineno, 1); };
  if (key == "big_m") {
    if (!(is >> big_m_)) bad();
  } else if (key == "frame_rotation") {
    if (!(is >> rotation_)) bad();
  } else if (key == "aircraft") {
    AircraftMeta a;
    std::string h0;
    if (!(is >> a.theta >> a.dev >> h0)) bad();
    a.h0 = std::strtod(h0.c_str(), nullptr);
    aircraft_.push_back(a);
  } else if (key == "pair") {
    PairMeta p;
    if (!(is >> p.lead >> p.trail >> p.alpha)) bad();
    pairs_.push_back(p);
  }
}

int Parser::declare(const std::string& name) {
  auto it = index_.find(name);
  if (it != index_.end()) return it->second;
  vars_.push_back(Variable{name, VarType::Continuous, 0.0, INFINITY});
  index_.emplace(name, static_cast<int>(vars_.size()) - 1);
  return static_cast<int>(vars_.size()) - 1;
}

// Parses "[+|-] [number] name" sequences starting at `pos`; stops at a sense
// token or the end.
std::size_t parse_terms(const std::vector<Token>& toks, std::size_t pos,
                        std::vector<std::pair<Reference, double>>& out,
                        const std::function<void(const std::string&, int, int)>& fail) {
  while (pos < toks.size()) {
    const Token& t = toks[pos];
    if (t.kind == TokKind::Le || t.kind == TokKind::Ge || t.kind == TokKind::Eq) break;
    double sign = 1.0;
    if (t.kind == TokKind::Plus || t.kind == TokKind::Minus) {
      sign = (t.kind == TokKind::Minus) ? -1.0 : 1.0;
      ++pos;
      if (pos >= toks.size()) fail("dangling sign", t.line, t.column);
    }
    double coef = 1.0;
    if (toks[pos].kind == TokKind::Number) {
      coef = toks[pos].value;
      ++pos;
      if (pos >= toks.size() || toks[pos].kind != TokKind::Name) {
        // A bare constant such as "obj: 0" contributes nothing.
        if (coef == 0.0) continue;
        const Token& at = toks[pos < toks.size() ? pos : pos - 1];
        fail("expected variable name after coefficient", at.line, at.column);
      }
    }
    if (toks[pos].kind != TokKind::Name) fail("expected variable name", toks[pos].line,
                                               toks[pos].column);
    out.push_back({Reference{toks[pos].text, toks[pos].line, toks[pos].column}, sign * coef});
    ++pos;
  }
  return pos;
}

void Parser::handle_objective(const std::vector<Token>& toks) {
  std::size_t pos = 0;
  if (toks.size() >= 2 && toks[0].kind == TokKind::Name && toks[1].kind == TokKind::Colon)
    pos = 2;
  auto f = [this](const std::string& m, int l, int c) { fail(m, l, c); };
  pos = parse_terms(toks, pos, objective_, f);
  if (pos != toks.size()) fail("unexpected token in objective", toks[pos].line, toks[pos].column);
}

void Parser::handle_constraint(const std::vector<Token>& line) {
  pending_.insert(pending_.end(), line.begin(), line.end());
  // Complete once a sense token followed by a value is present.
  std::size_t sense_at = pending_.size();
  for (std::size_t k = 0; k < pending_.size(); ++k) {
    const auto kind = pending_[k].kind;
    if (kind == TokKind::Le || kind == TokKind::Ge || kind == TokKind::Eq) {
      sense_at = k;
      break;
    }
  }
  if (sense_at == pending_.size()) return;
  std::size_t rhs_at = sense_at + 1;
  double rhs_sign = 1.0;
  if (rhs_at < pending_.size() &&
      (pending_[rhs_at].kind == TokKind::Minus || pending_[rhs_at].kind == TokKind::Plus)) {
    rhs_sign = pending_[rhs_at].kind == TokKind::Minus ? -1.0 : 1.0;
    ++rhs_at;
  }
  if (rhs_at >= pending_.size()) return;  // rhs on the next line
  const Token& rhs_tok = pending_[rhs_at];
  if (rhs_tok.kind != TokKind::Number)
    fail("expected right-hand side value", rhs_tok.line, rhs_tok.column);
  if (rhs_at + 1 != pending_.size())
    fail("trailing tokens after constraint", pending_[rhs_at + 1].line,
         pending_[rhs_at + 1].column);

  RawRow row;
  std::size_t pos = 0;
  if (pending_.size() >= 2 && pending_[0].kind == TokKind::Name &&
      pending_[1].kind == TokKind::Colon) {
    row.name = pending_[0].text;
    pos = 2;
  } else {
    row.name = "R" + std::to_string(rows_.size() + 1);
  }
  auto f = [this](const std::string& m, int l, int c) { fail(m, l, c); };
  pos = parse_terms(pending_, pos, row.terms, f);
  if (pos != sense_at) fail("malformed constraint", pending_[pos].line, pending_[pos].column);
  const auto kind = pending_[sense_at].kind;
  row.sense = kind == TokKind::Le ? Sense::LessEqual
              : kind == TokKind::Ge ? Sense::GreaterEqual
                                    : Sense::Equal;
  row.rhs = rhs_sign * rhs_tok.value;
  rows_.push_back(std::move(row));
  pending_.clear();
}

void Parser::handle_bound(const std::vector<Token>& t) {
  auto signed_value = [&](std::size_t& k) {
    double sign = 1.0;
    if (k < t.size() && (t[k].kind == TokKind::Minus || t[k].kind == TokKind::Plus)) {
      sign = t[k].kind == TokKind::Minus ? -1.0 : 1.0;
      ++k;
    }
    if (k >= t.size() || t[k].kind != TokKind::Number) {
      const Token& at = t[k < t.size() ? k : t.size() - 1];
      fail("expected bound value", at.line, at.column);
    }
    return sign * t[k++].value;
  };
  if (t.size() == 2 && t[0].kind == TokKind::Name && t[1].kind == TokKind::Name &&
      lower(t[1].text) == "free") {
    const int v = declare(t[0].text);
    vars_[v].lower = -INFINITY;
    vars_[v].upper = INFINITY;
    return;
  }
  std::size_t k = 0;
  if (t[0].kind == TokKind::Name) {
    const int v = declare(t[0].text);
    k = 1;
    if (k >= t.size()) fail("incomplete bound", t[0].line, t[0].column);
    const TokKind op = t[k++].kind;
    const double val = signed_value(k);
    if (op == TokKind::Le) vars_[v].upper = val;
    else if (op == TokKind::Ge) vars_[v].lower = val;
    else if (op == TokKind::Eq) vars_[v].lower = vars_[v].upper = val;
    else fail("expected comparison in bound", t[1].line, t[1].column);
  } else {
    const double lo = signed_value(k);
    if (k >= t.size() || t[k].kind != TokKind::Le) fail("expected '<=' in bound", t[0].line,
                                                        t[0].column);
    ++k;
    if (k >= t.size() || t[k].kind != TokKind::Name) fail("expected variable in bound",
                                                          t[0].line, t[0].column);
    const int v = declare(t[k].text);
    ++k;
    vars_[v].lower = lo;
    if (k < t.size()) {
      if (t[k].kind != TokKind::Le) fail("expected '<=' in bound", t[k].line, t[k].column);
      ++k;
      vars_[v].upper = signed_value(k);
    }
  }
  if (k != t.size()) fail("trailing tokens in bound", t[k].line, t[k].column);
}

void Parser::handle_binary(const std::vector<Token>& t) {
  for (const auto& tok : t) {
    if (tok.kind != TokKind::Name) fail("expected variable name", tok.line, tok.column);
    const bool fresh = index_.find(tok.text) == index_.end();
    const int v = declare(tok.text);
    vars_[v].type = VarType::Binary;
    if (fresh) {
      vars_[v].lower = 0.0;
      vars_[v].upper = 1.0;
    }
  }
}

MilpModel Parser::run() {
  int lineno = 0;
  std::size_t start = 0;
  bool saw_objective = false;
  while (start <= text_.size()) {
    std::size_t end = text_.find('\n', start);
    if (end == std::string_view::npos) end = text_.size();
    std::string_view line = text_.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ++lineno;
    start = end + 1;

    std::size_t first = line.find_first_not_of(" \t");
    if (first == std::string_view::npos) {
      if (end == text_.size()) break;
      continue;
    }
    if (line[first] == '\\') {
      parse_meta(line.substr(first + 1), lineno);
      if (end == text_.size()) break;
      continue;
    }
    // Section keywords occupy their own line.
    std::string head = lower(std::string(line.substr(first)));
    while (!head.empty() && std::isspace(static_cast<unsigned char>(head.back()))) head.pop_back();
    Section next = section_;
    if (head == "minimize" || head == "minimum" || head == "min") next = Section::Objective;
    else if (head == "subject to" || head == "such that" || head == "st" || head == "s.t.")
      next = Section::Constraints;
    else if (head == "bounds" || head == "bound") next = Section::Bounds;
    else if (head == "binary" || head == "binaries" || head == "bin") next = Section::Binary;
    else if (head == "end") next = Section::End;
    else if (head == "maximize" || head == "maximum" || head == "max")
      fail("only minimization models are supported", lineno, static_cast<int>(first) + 1);
    else if (head == "general" || head == "generals" || head == "gen")
      fail("general integer variables are not supported", lineno, static_cast<int>(first) + 1);
    if (next != section_) {
      if (!pending_.empty())
        fail("incomplete constraint", pending_.front().line, pending_.front().column);
      if (section_ == Section::End) fail("content after End", lineno, 1);
      section_ = next;
      if (next == Section::Objective) saw_objective = true;
      if (end == text_.size()) break;
      continue;
    }

    auto toks = tokenize_line(line, lineno);
    if (toks.empty()) continue;
    switch (section_) {
      case Section::None:
        fail("expected a section keyword such as 'Minimize'", lineno,
             static_cast<int>(first) + 1);
      case Section::Objective: handle_objective(toks); break;
      case Section::Constraints: handle_constraint(toks); break;
      case Section::Bounds: handle_bound(toks); break;
      case Section::Binary: handle_binary(toks); break;
      case Section::End: fail("content after End", lineno, static_cast<int>(first) + 1);
    }
    if (end == text_.size()) break;
  }
  if (!saw_objective) fail("missing 'Minimize' section", lineno, 1);
  if (section_ != Section::End) fail("missing 'End'", lineno, 1);
  if (!pending_.empty())
    fail("incomplete constraint", pending_.front().line, pending_.front().column);

  MilpModel m;
  m.variables = vars_;
  m.objective.assign(vars_.size(), 0.0);
  m.big_m = big_m_;
  auto resolve = [&](const Reference& r) {
    auto it = index_.find(r.name);
    if (it == index_.end()) fail("unknown variable '" + r.name + "'", r.line, r.column);
    return it->second;
  };
  for (const auto& [ref, c] : objective_) m.objective[resolve(ref)] += c;
  for (const auto& raw : rows_) {
    Constraint c;
    c.name = raw.name;
    c.sense = raw.sense;
    c.rhs = raw.rhs;
    for (const auto& [ref, coef] : raw.terms) c.terms.push_back(Term{resolve(ref), coef});
    m.rows.push_back(std::move(c));
  }
  m.map.frame_rotation = rotation_;
  for (const auto& a : aircraft_) {
    const int th = m.find_variable(a.theta);
    const int d = m.find_variable(a.dev);
    if (th < 0 || d < 0) fail("metadata names an unknown aircraft variable", 1, 1);
    m.map.heading_var.push_back(th);
    m.map.deviation_var.push_back(d);
    m.map.initial_heading.push_back(a.h0);
  }
  for (const auto& p : pairs_) {
    PairVars pv;
    pv.lead = p.lead - 1;
    pv.trail = p.trail - 1;
    pv.alpha = m.find_variable(p.alpha);
    // Names follow alpha_<a>_<b>; the binaries share the suffix.
    const std::string sfx = p.alpha.substr(p.alpha.find('_'));
    pv.b_diff_pos = m.find_variable("bdiffpos" + sfx);
    pv.b_sum_inf = m.find_variable("bsuminf" + sfx);
    pv.b_sum_sup = m.find_variable("bsumsup" + sfx);
    pv.b_case1 = m.find_variable("bcase1" + sfx);
    pv.b_case4 = m.find_variable("bcase4" + sfx);
    pv.b_alpha_pos = m.find_variable("balphapos" + sfx);
    pv.b_ineq_pos = m.find_variable("bineqpos" + sfx);
    for (int f = 0; f < 3; ++f) pv.b_family[f] = m.find_variable("b" + std::to_string(f + 1) + sfx);
    m.map.pairs.push_back(pv);
  }
  return m;
}

}  // namespace

MilpModel parse_lp(std::string_view text) { return Parser(text).run(); }

bool structurally_equal(const MilpModel& a, const MilpModel& b, double tol, std::string* why) {
  auto say = [&](const std::string& s) {
    if (why) *why = s;
    return false;
  };
  auto close = [&](double x, double y) {
    if (std::isinf(x) || std::isinf(y)) return x == y;
    return std::abs(x - y) <= tol * std::max(1.0, std::max(std::abs(x), std::abs(y)));
  };
  if (a.variables.size() != b.variables.size()) return say("variable count differs");
  std::unordered_map<std::string, int> bidx;
  for (std::size_t k = 0; k < b.variables.size(); ++k)
    bidx.emplace(b.variables[k].name, static_cast<int>(k));
  std::vector<int> to_b(a.variables.size());
  for (std::size_t k = 0; k < a.variables.size(); ++k) {
    const auto& va = a.variables[k];
    auto it = bidx.find(va.name);
    if (it == bidx.end()) return say("variable " + va.name + " missing");
    const auto& vb = b.variables[it->second];
    if (va.type != vb.type || !close(va.lower, vb.lower) || !close(va.upper, vb.upper))
      return say("variable " + va.name + " differs");
    if (!close(a.objective[k], b.objective[it->second]))
      return say("objective coefficient of " + va.name + " differs");
    to_b[k] = it->second;
  }
  if (a.rows.size() != b.rows.size()) return say("row count differs");
  std::unordered_map<std::string, const Constraint*> brows;
  for (const auto& r : b.rows) brows.emplace(r.name, &r);
  for (const auto& ra : a.rows) {
    auto it = brows.find(ra.name);
    if (it == brows.end()) return say("row " + ra.name + " missing");
    const Constraint& rb = *it->second;
    if (ra.sense != rb.sense || !close(ra.rhs, rb.rhs)) return say("row " + ra.name + " differs");
    std::map<int, double> ca, cb;
    for (const auto& t : ra.terms) ca[to_b[t.var]] += t.coef;
    for (const auto& t : rb.terms) cb[t.var] += t.coef;
    if (ca.size() != cb.size()) return say("row " + ra.name + " term count differs");
    for (const auto& [v, c] : ca) {
      auto jt = cb.find(v);
      if (jt == cb.end() || !close(c, jt->second))
        return say("row " + ra.name + " coefficient differs");
    }
  }
  return true;
}

}  // namespace degrade
