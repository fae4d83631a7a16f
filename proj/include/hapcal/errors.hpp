#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace hapcal {

// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// A caller violated a documented precondition (wrong vector length, seed
// outside limits, ...).
class ContractError : public Error {
public:
    explicit ContractError(const std::string& msg) : Error(msg) {}
};

// Invalid configuration data (chain file, scene file, perturbation config).
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// IK did not reach the requested tolerance. Carries the best iterate so
// callers can degrade gracefully.
class NoConvergence : public Error {
public:
    NoConvergence(const std::string& msg, double best_residual,
                  std::vector<double> best_joints)
        : Error(msg), best_residual(best_residual),
          best_joints(std::move(best_joints)) {}

    double best_residual;
    std::vector<double> best_joints;
};

// Contact search walked past the floor bound without touching the screen.
class NoContact : public Error {
public:
    explicit NoContact(const std::string& msg) : Error(msg) {}
};

// Fewer usable samples than an operation needs.
class InsufficientData : public Error {
public:
    explicit InsufficientData(const std::string& msg) : Error(msg) {}
};

// Training produced a non-finite loss. Carries the offending epoch.
class DivergenceError : public Error {
public:
    DivergenceError(const std::string& msg, int epoch)
        : Error(msg), epoch(epoch) {}

    int epoch;
};

// A prerequisite artifact is missing on disk (CLI step ordering).
class MissingArtifact : public Error {
public:
    explicit MissingArtifact(const std::string& msg) : Error(msg) {}
};

} // namespace hapcal
