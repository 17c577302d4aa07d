#pragma once

#include <stdexcept>
#include <string>

namespace bsyn {

/// Invalid parameters or an incompatible combination of inputs.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Data handed to a transform does not belong to the requested symmetry class.
class ParityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Non-finite or runaway values detected while time stepping.
class BlowupError : public std::runtime_error {
public:
    BlowupError(const std::string& what, long step, double time)
        : std::runtime_error(what + " (step " + std::to_string(step) + ", t = " + std::to_string(time) + ")"),
          step_(step), time_(time) {}

    long step() const noexcept { return step_; }
    double time() const noexcept { return time_; }

private:
    long step_;
    double time_;
};

}  // namespace bsyn

namespace bsyn {

/// A structural invariant (divergence, parity pairing) does not hold.
class InvariantError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

}  // namespace bsyn
