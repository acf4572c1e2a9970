#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "envsniff/python_ast.hpp"

namespace envsniff::py {

/// Grammar level used for parsing. `modern` is the 3.x language; `legacy`
/// accepts the 2.7 statement forms (print/exec statements, backticks, `<>`,
/// `except E, name`, old octal and long literals).
enum class Grammar { modern, legacy };

enum class TokenKind { name, number, string, op, newline, indent, dedent, end };

struct Token {
  TokenKind kind;
  std::string text;
  int line = 0;
};

/// Splits source text into logical-line tokens with INDENT/DEDENT markers.
/// Throws envsniff::SyntaxError (module path left empty) on lexical errors.
std::vector<Token> tokenize(std::string_view source, Grammar grammar);

/// Parses a whole module under one grammar level.
Module parse_module(std::string_view source, Grammar grammar);

/// Parses under the modern grammar and retries under the legacy grammar on
/// failure. The error from the modern attempt is rethrown if both fail.
Module parse_module_any(std::string_view source, Grammar* used = nullptr);

/// Decodes source bytes using the declared encoding header (first two lines),
/// defaulting to UTF-8. Latin-1 family encodings are transcoded; a UTF-8 BOM
/// is dropped.
std::string decode_source(std::string_view bytes);

}  // namespace envsniff::py
