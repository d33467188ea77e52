#pragma once

#include <string>
#include <utility>
#include <vector>

namespace exs::jsonw {

// 17 significant digits; round-trips any double exactly.
std::string fmt(double x);

// Minimal JSON document builder. Keys keep insertion order and doubles are
// printed with fmt(), so identical inputs serialize to identical bytes.
class Value {
 public:
  static Value object();
  static Value array();
  static Value str(std::string s);
  static Value num(double d);
  static Value integer(long long i);
  static Value boolean(bool b);
  static Value null();

  Value& set(const std::string& key, Value v);
  Value& set(const std::string& key, const std::string& s) { return set(key, str(s)); }
  Value& set(const std::string& key, const char* s) { return set(key, str(s)); }
  Value& set(const std::string& key, double d) { return set(key, num(d)); }
  Value& set(const std::string& key, int i) { return set(key, integer(i)); }
  Value& set(const std::string& key, long long i) { return set(key, integer(i)); }
  Value& set(const std::string& key, bool b) { return set(key, boolean(b)); }

  Value& push(Value v);
  Value& push(double d) { return push(num(d)); }

  std::string dump(int indent = 2) const;

 private:
  enum class Kind { object, array, number, integer, string, boolean, null };
  Kind kind_ = Kind::null;
  std::vector<std::pair<std::string, Value>> members_;
  std::vector<Value> items_;
  std::string s_;
  double d_ = 0.0;
  long long i_ = 0;
  bool b_ = false;

  void write(std::string& out, int indent, int depth) const;
};

}  // namespace exs::jsonw
