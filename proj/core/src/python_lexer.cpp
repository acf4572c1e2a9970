#include <algorithm>
#include <array>
#include <cctype>
#include <regex>

#include "envsniff/errors.hpp"
#include "envsniff/python_parser.hpp"

namespace envsniff::py {

namespace {

bool is_ident_start(unsigned char c) { return std::isalpha(c) || c == '_' || c >= 0x80; }
bool is_ident_char(unsigned char c) { return std::isalnum(c) || c == '_' || c >= 0x80; }

bool is_string_prefix(std::string_view word, Grammar grammar) {
  std::string lower;
  for (char c : word) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  static constexpr std::array<std::string_view, 8> modern = {"r", "u", "b", "f", "br", "rb", "fr", "rf"};
  static constexpr std::array<std::string_view, 6> legacy = {"r", "u", "b", "br", "ur", "rb"};
  if (grammar == Grammar::modern) {
    return std::find(modern.begin(), modern.end(), lower) != modern.end();
  }
  return std::find(legacy.begin(), legacy.end(), lower) != legacy.end();
}

// Longest-first operator table.
constexpr std::array<std::string_view, 48> kOperators = {
    "**=", "//=", ">>=", "<<=", "...", "->", ":=", "**", "//", "<<", ">>", "<=",
    ">=",  "==",  "!=",  "<>",  "+=",  "-=", "*=", "/=", "%=", "&=", "|=", "^=",
    "@=",  "+",   "-",   "*",   "/",   "%",  "@",  "&",  "|",  "^",  "~",  "<",
    ">",   "(",   ")",   "[",   "]",   "{",  "}",  ",",  ":",  ".",  ";",  "=",
};

class Lexer {
 public:
  Lexer(std::string_view src, Grammar grammar) : src_(src), grammar_(grammar) {}

  std::vector<Token> run() {
    while (pos_ < src_.size()) {
      if (at_line_start_ && brackets_.empty()) {
        if (!handle_indentation()) continue;
      }
      lex_one();
    }
    if (!brackets_.empty()) fail(bracket_lines_.back(), "unexpected EOF: unclosed '" + std::string(1, brackets_.back()) + "'");
    if (!tokens_.empty() && tokens_.back().kind != TokenKind::newline &&
        tokens_.back().kind != TokenKind::dedent && tokens_.back().kind != TokenKind::indent) {
      push(TokenKind::newline, "");
    }
    while (indents_.size() > 1) {
      indents_.pop_back();
      push(TokenKind::dedent, "");
    }
    push(TokenKind::end, "");
    return std::move(tokens_);
  }

 private:
  [[noreturn]] void fail(int line, const std::string& msg) { throw SyntaxError("", line, msg); }

  void push(TokenKind kind, std::string text) { tokens_.push_back(Token{kind, std::move(text), line_}); }

  char peek(std::size_t ahead = 0) const {
    return pos_ + ahead < src_.size() ? src_[pos_ + ahead] : '\0';
  }

  // Returns false when the physical line was blank or comment-only and has
  // been consumed entirely.
  bool handle_indentation() {
    int column = 0;
    std::size_t p = pos_;
    while (p < src_.size()) {
      char c = src_[p];
      if (c == ' ') {
        ++column;
      } else if (c == '\t') {
        column = (column / 8 + 1) * 8;
      } else if (c == '\f') {
        column = 0;
      } else {
        break;
      }
      ++p;
    }
    if (p >= src_.size()) {
      pos_ = p;
      return false;
    }
    char c = src_[p];
    if (c == '#' || c == '\n' || c == '\r' || (c == '\\' && p + 1 < src_.size() && src_[p + 1] == '\n')) {
      // blank, comment-only, or a bare continuation: no indentation effect
      while (p < src_.size() && src_[p] != '\n') ++p;
      if (p < src_.size()) {
        ++p;
        ++line_;
      }
      pos_ = p;
      return false;
    }
    pos_ = p;
    at_line_start_ = false;
    if (column > indents_.back()) {
      indents_.push_back(column);
      push(TokenKind::indent, "");
    } else {
      while (column < indents_.back()) {
        indents_.pop_back();
        push(TokenKind::dedent, "");
      }
      if (column != indents_.back()) fail(line_, "unindent does not match any outer indentation level");
    }
    return true;
  }

  void lex_one() {
    char c = peek();
    if (c == ' ' || c == '\t' || c == '\f') {
      ++pos_;
      return;
    }
    if (c == '#') {
      while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
      return;
    }
    if (c == '\r') {
      ++pos_;
      return;
    }
    if (c == '\\') {
      std::size_t p = pos_ + 1;
      if (p < src_.size() && src_[p] == '\r') ++p;
      if (p < src_.size() && src_[p] == '\n') {
        pos_ = p + 1;
        ++line_;
        return;
      }
      if (p >= src_.size()) {
        pos_ = p;
        return;
      }
      fail(line_, "unexpected character after line continuation character");
    }
    if (c == '\n') {
      ++pos_;
      if (brackets_.empty()) {
        if (!tokens_.empty() && tokens_.back().kind != TokenKind::newline &&
            tokens_.back().kind != TokenKind::indent && tokens_.back().kind != TokenKind::dedent) {
          push(TokenKind::newline, "");
        }
        at_line_start_ = true;
      }
      ++line_;
      return;
    }
    auto uc = static_cast<unsigned char>(c);
    if (is_ident_start(uc)) {
      std::size_t start = pos_;
      while (pos_ < src_.size() && is_ident_char(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      std::string_view word = src_.substr(start, pos_ - start);
      if ((peek() == '\'' || peek() == '"') && is_string_prefix(word, grammar_)) {
        lex_string(start);
        return;
      }
      push(TokenKind::name, std::string(word));
      return;
    }
    if (std::isdigit(uc) || (c == '.' && std::isdigit(static_cast<unsigned char>(peek(1))))) {
      lex_number();
      return;
    }
    if (c == '\'' || c == '"') {
      lex_string(pos_);
      return;
    }
    if (c == '`' && grammar_ == Grammar::legacy) {
      ++pos_;
      push(TokenKind::op, "`");
      return;
    }
    for (std::string_view op : kOperators) {
      if (src_.substr(pos_, op.size()) == op) {
        if (op == "<>" && grammar_ != Grammar::legacy) continue;
        pos_ += op.size();
        if (op == "(" || op == "[" || op == "{") {
          brackets_.push_back(op[0]);
          bracket_lines_.push_back(line_);
        } else if (op == ")" || op == "]" || op == "}") {
          char open = op == ")" ? '(' : op == "]" ? '[' : '{';
          if (brackets_.empty() || brackets_.back() != open) {
            fail(line_, "unmatched '" + std::string(op) + "'");
          }
          brackets_.pop_back();
          bracket_lines_.pop_back();
        }
        push(TokenKind::op, std::string(op));
        return;
      }
    }
    fail(line_, std::string("invalid character '") + c + "'");
  }

  void lex_number() {
    std::size_t start = pos_;
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.') {
        // exponent sign belongs to the literal
        if ((c == 'e' || c == 'E') && (peek(1) == '+' || peek(1) == '-') &&
            src_.substr(start, 2) != "0x" && src_.substr(start, 2) != "0X") {
          pos_ += 2;
          continue;
        }
        if (c == '.' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '.') break;
        ++pos_;
        continue;
      }
      break;
    }
    std::string text(src_.substr(start, pos_ - start));
    if (grammar_ == Grammar::modern) {
      if (!text.empty() && (text.back() == 'l' || text.back() == 'L')) fail(line_, "invalid decimal literal");
      if (text.size() > 1 && text[0] == '0' && std::isdigit(static_cast<unsigned char>(text[1]))) {
        bool all_zero = std::all_of(text.begin(), text.end(), [](char ch) { return ch == '0' || ch == '_'; });
        if (!all_zero && text.find_first_of(".eEjJ") == std::string::npos) {
          fail(line_, "leading zeros in decimal integer literals are not permitted");
        }
      }
    }
    push(TokenKind::number, std::move(text));
  }

  // Raw and cooked strings skip escapes identically: a raw literal still
  // cannot end in a lone backslash.
  void lex_string(std::size_t start) {
    char quote = peek();
    bool triple = peek(1) == quote && peek(2) == quote;
    int start_line = line_;
    pos_ += triple ? 3 : 1;
    while (true) {
      if (pos_ >= src_.size()) fail(start_line, triple ? "unterminated triple-quoted string literal" : "unterminated string literal");
      char c = src_[pos_];
      if (c == '\\') {
        if (pos_ + 1 < src_.size() && src_[pos_ + 1] == '\n') ++line_;
        pos_ += 2;
        continue;
      }
      if (c == '\n') {
        if (!triple) fail(start_line, "unterminated string literal");
        ++line_;
        ++pos_;
        continue;
      }
      if (c == quote) {
        if (!triple) {
          ++pos_;
          break;
        }
        if (peek(1) == quote && peek(2) == quote) {
          pos_ += 3;
          break;
        }
      }
      ++pos_;
    }
    Token t{TokenKind::string, std::string(src_.substr(start, pos_ - start)), start_line};
    tokens_.push_back(std::move(t));
  }

  std::string_view src_;
  Grammar grammar_;
  std::size_t pos_ = 0;
  int line_ = 1;
  bool at_line_start_ = true;
  std::vector<int> indents_{0};
  std::vector<char> brackets_;
  std::vector<int> bracket_lines_;
  std::vector<Token> tokens_;
};

}  // namespace

std::vector<Token> tokenize(std::string_view source, Grammar grammar) {
  return Lexer(source, grammar).run();
}

std::string decode_source(std::string_view bytes) {
  if (bytes.substr(0, 3) == "\xEF\xBB\xBF") bytes.remove_prefix(3);

  // The declaration may only appear on one of the first two lines.
  std::size_t first_nl = bytes.find('\n');
  std::size_t second_nl = first_nl == std::string_view::npos ? first_nl : bytes.find('\n', first_nl + 1);
  std::string head(bytes.substr(0, second_nl));
  static const std::regex coding_re(R"(^[ \t\f]*#.*?coding[:=][ \t]*([-\w.]+))");
  std::string encoding;
  std::size_t line_start = 0;
  for (int i = 0; i < 2 && line_start <= head.size(); ++i) {
    std::size_t end = head.find('\n', line_start);
    std::string line = head.substr(line_start, end == std::string::npos ? std::string::npos : end - line_start);
    std::smatch m;
    if (std::regex_search(line, m, coding_re)) {
      encoding = m[1].str();
      break;
    }
    if (end == std::string::npos) break;
    line_start = end + 1;
  }
  std::transform(encoding.begin(), encoding.end(), encoding.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  std::replace(encoding.begin(), encoding.end(), '_', '-');

  static constexpr std::array<std::string_view, 7> latin = {
      "latin-1", "latin1", "iso-8859-1", "iso8859-1", "iso-8859-15", "cp1252", "windows-1252"};
  if (std::find(latin.begin(), latin.end(), encoding) == latin.end()) return std::string(bytes);

  std::string out;
  out.reserve(bytes.size() + bytes.size() / 8);
  for (char ch : bytes) {
    auto c = static_cast<unsigned char>(ch);
    if (c < 0x80) {
      out += ch;
    } else {
      out += static_cast<char>(0xC0 | (c >> 6));
      out += static_cast<char>(0x80 | (c & 0x3F));
    }
  }
  return out;
}

}  // namespace envsniff::py
