#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace envsniff {

/// A release version ordered by the package-index rules: epoch, then release
/// segments numerically (trailing zeros ignored), dev < pre < final < post.
/// Strings that do not parse keep their text and sort after every valid
/// version, lexicographically among themselves.
class Version {
 public:
  enum class PreKind : std::uint8_t { alpha, beta, rc };

  Version() = default;

  static Version parse(std::string_view text);

  bool valid() const noexcept { return valid_; }
  const std::string& str() const noexcept { return text_; }
  const std::vector<std::int64_t>& release() const noexcept { return release_; }
  bool is_prerelease() const noexcept { return pre_.has_value() || dev_.has_value(); }

  /// Canonical spelling (`1.0rc1.post2`), or the raw text when invalid.
  std::string normalized() const;

  friend std::strong_ordering operator<=>(const Version& a, const Version& b);
  friend bool operator==(const Version& a, const Version& b) {
    return (a <=> b) == std::strong_ordering::equal;
  }

 private:
  std::string text_;
  bool valid_ = false;
  std::int64_t epoch_ = 0;
  std::vector<std::int64_t> release_;
  std::optional<std::pair<PreKind, std::int64_t>> pre_;
  std::optional<std::int64_t> post_;
  std::optional<std::int64_t> dev_;
  std::string local_;
};

/// Orders version strings; convenience for containers keyed by raw text.
struct VersionLess {
  bool operator()(const std::string& a, const std::string& b) const {
    return Version::parse(a) < Version::parse(b);
  }
};

/// Package-index name normalization: lowercase, runs of `-`, `_`, `.` become `-`.
std::string normalize_library_name(std::string_view name);

}  // namespace envsniff
