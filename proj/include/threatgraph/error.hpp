#pragma once

#include <stdexcept>
#include <string>

namespace threatgraph {

// Failure classes surfaced by the CLI as machine-parsable exit codes.
enum class ErrorClass { IO, SCHEMA, CONFIG, NUMERIC };

class Error : public std::runtime_error {
public:
    Error(ErrorClass cls, const std::string& msg)
        : std::runtime_error(msg), cls_(cls) {}

    ErrorClass error_class() const { return cls_; }

private:
    ErrorClass cls_;
};

inline Error io_error(const std::string& msg)      { return Error(ErrorClass::IO, msg); }
inline Error schema_error(const std::string& msg)  { return Error(ErrorClass::SCHEMA, msg); }
inline Error config_error(const std::string& msg)  { return Error(ErrorClass::CONFIG, msg); }
inline Error domain_error(const std::string& msg)  { return Error(ErrorClass::NUMERIC, msg); }

inline const char* error_class_name(ErrorClass cls) {
    switch (cls) {
        case ErrorClass::IO:      return "IO";
        case ErrorClass::SCHEMA:  return "SCHEMA";
        case ErrorClass::CONFIG:  return "CONFIG";
        case ErrorClass::NUMERIC: return "NUMERIC";
    }
    return "UNKNOWN";
}

} // namespace threatgraph
