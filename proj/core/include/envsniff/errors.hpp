#pragma once

#include <stdexcept>
#include <string>

namespace envsniff {

/// Base of every error the library throws. Callers that only need a message
/// can catch this; the subclasses carry the structured fields.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Source text could not be parsed under any supported grammar level.
class SyntaxError : public Error {
 public:
  SyntaxError(std::string module_path, int line, const std::string& detail)
      : Error(module_path + ":" + std::to_string(line) + ": " + detail),
        module_path_(std::move(module_path)),
        line_(line),
        detail_(detail) {}

  const std::string& module_path() const noexcept { return module_path_; }
  int line() const noexcept { return line_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  std::string module_path_;
  int line_;
  std::string detail_;
};

class EmptyRelease : public Error {
 public:
  using Error::Error;
};

class LibraryMismatch : public Error {
 public:
  using Error::Error;
};

class DuplicateRelease : public Error {
 public:
  using Error::Error;
};

class CorruptBank : public Error {
 public:
  explicit CorruptBank(const std::string& reason)
      : Error("corrupt bank: " + reason) {}
};

class UnsupportedFormat : public Error {
 public:
  UnsupportedFormat(int found, int supported)
      : Error("unsupported bank format_version " + std::to_string(found) +
              " (supported: " + std::to_string(supported) + ")"),
        found_(found),
        supported_(supported) {}

  int found() const noexcept { return found_; }
  int supported() const noexcept { return supported_; }

 private:
  int found_;
  int supported_;
};

class IndexUnavailable : public Error {
 public:
  using Error::Error;
};

class UnknownLibrary : public Error {
 public:
  explicit UnknownLibrary(const std::string& name)
      : Error("unknown library: " + name), name_(name) {}
  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

class ChecksumMismatch : public Error {
 public:
  using Error::Error;
};

class CorruptArchive : public Error {
 public:
  using Error::Error;
};

class IngestDegraded : public Error {
 public:
  IngestDegraded(const std::string& what, int modules, int failed)
      : Error(what), modules_(modules), failed_(failed) {}
  int modules() const noexcept { return modules_; }
  int failed() const noexcept { return failed_; }

 private:
  int modules_;
  int failed_;
};

class MalformedNotebook : public Error {
 public:
  explicit MalformedNotebook(const std::string& reason)
      : Error("malformed notebook: " + reason) {}
};

class EmptyBank : public Error {
 public:
  EmptyBank() : Error("API bank is empty") {}
};

class ExecutorUnavailable : public Error {
 public:
  using Error::Error;
};

}  // namespace envsniff
