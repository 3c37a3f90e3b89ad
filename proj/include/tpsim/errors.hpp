#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace tpsim {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Config, demand or zone input rejected at ingestion.
class ValidationError : public Error {
public:
    enum class Kind { schema, invariant, unit };

    ValidationError(Kind kind, std::string field, const std::string& message)
        : Error(field + ": " + message), kind_(kind), field_(std::move(field)) {}

    Kind kind() const noexcept { return kind_; }
    const std::string& field() const noexcept { return field_; }

private:
    Kind kind_;
    std::string field_;
};

inline const char* to_string(ValidationError::Kind kind) {
    switch (kind) {
    case ValidationError::Kind::schema: return "schema";
    case ValidationError::Kind::invariant: return "invariant";
    case ValidationError::Kind::unit: return "unit";
    }
    return "unknown";
}

class IoError : public Error {
public:
    IoError(std::string path, const std::string& message)
        : Error(path + ": " + message), path_(std::move(path)) {}

    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

// Inputs that pass validation but are inconsistent for a model step, e.g. a
// time shift with nowhere to go.
class ModelError : public Error {
public:
    ModelError(std::string where, const std::string& message)
        : Error(where + ": " + message), where_(std::move(where)) {}

    const std::string& where() const noexcept { return where_; }

private:
    std::string where_;
};

// Failure while evaluating a named node of the evaluation graph.
class NodeError : public Error {
public:
    NodeError(std::string node, const std::string& message)
        : Error("node '" + node + "': " + message), node_(std::move(node)) {}

    const std::string& node() const noexcept { return node_; }

private:
    std::string node_;
};

class EnsembleError : public Error {
public:
    EnsembleError(std::size_t draw, std::string node, const std::string& message)
        : Error("draw " + std::to_string(draw) + ", node '" + node + "': " + message),
          draw_(draw), node_(std::move(node)) {}

    std::size_t draw() const noexcept { return draw_; }
    const std::string& node() const noexcept { return node_; }

private:
    std::size_t draw_;
    std::string node_;
};

} // namespace tpsim
