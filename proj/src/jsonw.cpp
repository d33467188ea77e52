#include "exs/jsonw.hpp"

#include <cmath>
#include <cstdio>

#include "exs/errors.hpp"

namespace exs::jsonw {

std::string fmt(double x) {
  if (!std::isfinite(x)) fail(errc::internal, "non-finite value in report");
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

Value Value::object() { Value v; v.kind_ = Kind::object; return v; }
Value Value::array() { Value v; v.kind_ = Kind::array; return v; }
Value Value::str(std::string s) { Value v; v.kind_ = Kind::string; v.s_ = std::move(s); return v; }
Value Value::num(double d) { Value v; v.kind_ = Kind::number; v.d_ = d; return v; }
Value Value::integer(long long i) { Value v; v.kind_ = Kind::integer; v.i_ = i; return v; }
Value Value::boolean(bool b) { Value v; v.kind_ = Kind::boolean; v.b_ = b; return v; }
Value Value::null() { return Value{}; }

Value& Value::set(const std::string& key, Value v) {
  if (kind_ != Kind::object) fail(errc::internal, "set() on non-object json value");
  members_.emplace_back(key, std::move(v));
  return *this;
}

Value& Value::push(Value v) {
  if (kind_ != Kind::array) fail(errc::internal, "push() on non-array json value");
  items_.push_back(std::move(v));
  return *this;
}

namespace {

void escape(const std::string& s, std::string& out) {
  out += '"';
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  out += '"';
}

void pad(std::string& out, int indent, int depth) {
  if (indent <= 0) return;
  out += '\n';
  out.append(static_cast<size_t>(indent) * depth, ' ');
}

}  // namespace

void Value::write(std::string& out, int indent, int depth) const {
  switch (kind_) {
    case Kind::null: out += "null"; break;
    case Kind::boolean: out += b_ ? "true" : "false"; break;
    case Kind::integer: out += std::to_string(i_); break;
    case Kind::number: out += fmt(d_); break;
    case Kind::string: escape(s_, out); break;
    case Kind::array: {
      if (items_.empty()) { out += "[]"; break; }
      out += '[';
      for (size_t i = 0; i < items_.size(); ++i) {
        if (i) out += ',';
        pad(out, indent, depth + 1);
        items_[i].write(out, indent, depth + 1);
      }
      pad(out, indent, depth);
      out += ']';
      break;
    }
    case Kind::object: {
      if (members_.empty()) { out += "{}"; break; }
      out += '{';
      for (size_t i = 0; i < members_.size(); ++i) {
        if (i) out += ',';
        pad(out, indent, depth + 1);
        escape(members_[i].first, out);
        out += indent > 0 ? ": " : ":";
        members_[i].second.write(out, indent, depth + 1);
      }
      pad(out, indent, depth);
      out += '}';
      break;
    }
  }
}

std::string Value::dump(int indent) const {
  std::string out;
  write(out, indent, 0);
  out += '\n';
  return out;
}

}  // namespace exs::jsonw
