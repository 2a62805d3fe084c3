#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace lexshare {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input text. line is 1-based; 0 when no single line is at fault.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& message)
      : Error("line " + std::to_string(line) + ": " + message), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class LookupError : public Error {
 public:
  using Error::Error;
};

class AlignmentError : public Error {
 public:
  AlignmentError(std::string sentence_id, const std::string& message)
      : Error("sentence '" + sentence_id + "': " + message), sentence_id_(std::move(sentence_id)) {}
  const std::string& sentence_id() const noexcept { return sentence_id_; }

 private:
  std::string sentence_id_;
};

class SizingError : public Error {
 public:
  using Error::Error;
};

// Entropy of an empty distribution, correlation with zero variance, accuracy over no tokens.
class UndefinedError : public Error {
 public:
  using Error::Error;
};

class ArityError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

class MergeError : public Error {
 public:
  MergeError(std::string language, const std::string& message)
      : Error("language '" + language + "': " + message), language_(std::move(language)) {}
  const std::string& language() const noexcept { return language_; }

 private:
  std::string language_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DeterminismError : public Error {
 public:
  using Error::Error;
};

// Non-finite loss or gradient. path names the parameter when known; epoch is 1-based, 0 when unknown.
class DivergenceError : public Error {
 public:
  DivergenceError(std::string path, std::size_t epoch, const std::string& message)
      : Error(message), path_(std::move(path)), epoch_(epoch) {}
  const std::string& path() const noexcept { return path_; }
  std::size_t epoch() const noexcept { return epoch_; }

 private:
  std::string path_;
  std::size_t epoch_;
};

}  // namespace lexshare
