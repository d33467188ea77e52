#pragma once

#include <stdexcept>
#include <string>

namespace exs {

enum class errc {
  domain,              // invalid argument value
  divergence,          // mathematically divergent request
  degenerate_surface,  // excluded limit surface (cylinder/sphere)
  insufficient_mesh,   // too few degrees of freedom for the request
  assembly_integrity,  // assembled operator violates a structural property
  incomplete_spectrum, // angular mode cap reached before the spectrum closed
  branch_crossing,     // eigenvalue branch tracking lost
  precondition,        // operation preconditions not met
  config,              // malformed job configuration
  internal,            // invariant broken inside the library
};

class Error : public std::runtime_error {
 public:
  Error(errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  errc code() const noexcept { return code_; }

 private:
  errc code_;
};

[[noreturn]] inline void fail(errc code, const std::string& msg) { throw Error(code, msg); }

}  // namespace exs
