#pragma once

#include <stdexcept>
#include <string>

namespace mci {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class FileNotFound : public Error {
public:
    using Error::Error;
};

class CorruptDatabase : public Error {
public:
    using Error::Error;
};

class QueryFailure : public Error {
public:
    using Error::Error;
};

class IncomparableTruncated : public Error {
public:
    using Error::Error;
};

class EmptyInput : public Error {
public:
    using Error::Error;
};

class MissingProfile : public Error {
public:
    using Error::Error;
};

class EmptyColumnSet : public Error {
public:
    using Error::Error;
};

class UnknownColumn : public Error {
public:
    using Error::Error;
};

class NoCandidates : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class MalformedDataset : public Error {
public:
    using Error::Error;
};

}  // namespace mci
