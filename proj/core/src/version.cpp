#include "envsniff/version.hpp"

#include <algorithm>
#include <cctype>
#include <limits>
#include <tuple>

namespace envsniff {

namespace {

bool consume(std::string_view& s, std::string_view word) {
  if (s.size() < word.size()) return false;
  for (std::size_t i = 0; i < word.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(s[i])) != word[i]) return false;
  }
  s.remove_prefix(word.size());
  return true;
}

bool consume_separator(std::string_view& s) {
  if (!s.empty() && (s.front() == '.' || s.front() == '-' || s.front() == '_')) {
    s.remove_prefix(1);
    return true;
  }
  return false;
}

std::optional<std::int64_t> consume_number(std::string_view& s) {
  std::size_t n = 0;
  while (n < s.size() && std::isdigit(static_cast<unsigned char>(s[n]))) ++n;
  if (n == 0 || n > 18) return std::nullopt;
  std::int64_t v = 0;
  for (std::size_t i = 0; i < n; ++i) v = v * 10 + (s[i] - '0');
  s.remove_prefix(n);
  return v;
}

// Release segments with trailing zeros removed, so 1.0 == 1.0.0.
std::vector<std::int64_t> trimmed(const std::vector<std::int64_t>& r) {
  std::vector<std::int64_t> out = r;
  while (out.size() > 1 && out.back() == 0) out.pop_back();
  return out;
}

}  // namespace

Version Version::parse(std::string_view text) {
  Version v;
  v.text_ = std::string(text);

  std::string_view s = text;
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  if (!s.empty() && (s.front() == 'v' || s.front() == 'V')) s.remove_prefix(1);

  auto first = consume_number(s);
  if (!first) return v;
  if (!s.empty() && s.front() == '!') {
    s.remove_prefix(1);
    v.epoch_ = *first;
    first = consume_number(s);
    if (!first) return v;
  }
  v.release_.push_back(*first);
  while (s.size() >= 2 && s.front() == '.' && std::isdigit(static_cast<unsigned char>(s[1]))) {
    s.remove_prefix(1);
    v.release_.push_back(*consume_number(s));
  }

  // pre-release
  {
    std::string_view probe = s;
    consume_separator(probe);
    std::optional<PreKind> kind;
    if (consume(probe, "alpha") || consume(probe, "a")) {
      kind = PreKind::alpha;
    } else if (consume(probe, "beta") || consume(probe, "b")) {
      kind = PreKind::beta;
    } else if (consume(probe, "rc") || consume(probe, "c") || consume(probe, "preview") ||
               consume(probe, "pre")) {
      kind = PreKind::rc;
    }
    if (kind) {
      consume_separator(probe);
      auto n = consume_number(probe);
      v.pre_ = std::make_pair(*kind, n.value_or(0));
      s = probe;
    }
  }

  // post-release, including the implicit `-N` spelling
  {
    std::string_view probe = s;
    if (!probe.empty() && probe.front() == '-' && probe.size() > 1 &&
        std::isdigit(static_cast<unsigned char>(probe[1]))) {
      probe.remove_prefix(1);
      v.post_ = consume_number(probe);
      s = probe;
    } else {
      consume_separator(probe);
      if (consume(probe, "post") || consume(probe, "rev") || consume(probe, "r")) {
        consume_separator(probe);
        v.post_ = consume_number(probe).value_or(0);
        s = probe;
      }
    }
  }

  // dev-release
  {
    std::string_view probe = s;
    consume_separator(probe);
    if (consume(probe, "dev")) {
      consume_separator(probe);
      v.dev_ = consume_number(probe).value_or(0);
      s = probe;
    }
  }

  if (!s.empty() && s.front() == '+') {
    s.remove_prefix(1);
    if (s.empty()) return v;
    for (char c : s) {
      if (!std::isalnum(static_cast<unsigned char>(c)) && c != '.' && c != '-' && c != '_') {
        return v;
      }
    }
    v.local_ = std::string(s);
    std::transform(v.local_.begin(), v.local_.end(), v.local_.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    s = {};
  }

  v.valid_ = s.empty();
  return v;
}

std::string Version::normalized() const {
  if (!valid_) return text_;
  std::string out;
  if (epoch_ != 0) out += std::to_string(epoch_) + "!";
  for (std::size_t i = 0; i < release_.size(); ++i) {
    if (i) out += '.';
    out += std::to_string(release_[i]);
  }
  if (pre_) {
    static constexpr const char* names[] = {"a", "b", "rc"};
    out += names[static_cast<int>(pre_->first)];
    out += std::to_string(pre_->second);
  }
  if (post_) out += ".post" + std::to_string(*post_);
  if (dev_) out += ".dev" + std::to_string(*dev_);
  if (!local_.empty()) out += "+" + local_;
  return out;
}

std::strong_ordering operator<=>(const Version& a, const Version& b) {
  if (a.valid_ != b.valid_) return a.valid_ ? std::strong_ordering::less : std::strong_ordering::greater;
  if (!a.valid_) return a.text_ <=> b.text_;

  if (auto c = a.epoch_ <=> b.epoch_; c != 0) return c;
  if (auto c = trimmed(a.release_) <=> trimmed(b.release_); c != 0) return c;

  // Phase keys: dev-only release < pre-release < final; post sorts after.
  auto pre_key = [](const Version& v) {
    if (!v.pre_ && !v.post_ && v.dev_) return std::make_tuple(-1, 0LL);
    if (!v.pre_) return std::make_tuple(3, 0LL);
    return std::make_tuple(static_cast<int>(v.pre_->first), static_cast<long long>(v.pre_->second));
  };
  if (auto c = pre_key(a) <=> pre_key(b); c != 0) return c;

  auto post_key = [](const Version& v) { return v.post_ ? *v.post_ : -1; };
  if (auto c = post_key(a) <=> post_key(b); c != 0) return c;

  auto dev_key = [](const Version& v) {
    return v.dev_ ? *v.dev_ : std::numeric_limits<std::int64_t>::max();
  };
  if (auto c = dev_key(a) <=> dev_key(b); c != 0) return c;

  return a.local_ <=> b.local_;
}

std::string normalize_library_name(std::string_view name) {
  std::string out;
  out.reserve(name.size());
  bool pending_dash = false;
  for (char c : name) {
    if (c == '-' || c == '_' || c == '.') {
      pending_dash = !out.empty();
      continue;
    }
    if (pending_dash) out += '-';
    pending_dash = false;
    out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

}  // namespace envsniff
