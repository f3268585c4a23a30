#pragma once

#include <stdexcept>
#include <string>

namespace reposim {

// Root of every error the library raises. Each subclass names one failure
// class from the module contracts so callers can map them to exit codes or
// wire envelopes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class MalformedDistribution : public Error {
public:
    using Error::Error;
};

class SchemaError : public Error {
public:
    using Error::Error;
};

class SchemaViolation : public Error {
public:
    using Error::Error;
};

class BackendUnavailable : public Error {
public:
    using Error::Error;
};

class ExprInvalid : public Error {
public:
    using Error::Error;
};

class ExprEvalError : public Error {
public:
    using Error::Error;
};

class UnknownPlaceholder : public Error {
public:
    using Error::Error;
};

class PathNotInRepository : public Error {
public:
    using Error::Error;
};

class FileNotFound : public Error {
public:
    using Error::Error;
};

class InternalInconsistency : public Error {
public:
    using Error::Error;
};

class CertificationFailure : public Error {
public:
    using Error::Error;
};

class ParaphraseContract : public Error {
public:
    using Error::Error;
};

class AgentUnavailable : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

// Malformed tool arguments such as a bad listing pattern.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

}  // namespace reposim
