#ifndef ALPHALAB_DATE_HPP
#define ALPHALAB_DATE_HPP

#include <charconv>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace alphalab {

/// Calendar date (proleptic Gregorian), ordered chronologically.
class Date {
 public:
  constexpr Date() = default;
  constexpr Date(int year, unsigned month, unsigned day)
      : year_(year), month_(month), day_(day) {}

  constexpr int year() const noexcept { return year_; }
  constexpr unsigned month() const noexcept { return month_; }
  constexpr unsigned day() const noexcept { return day_; }

  static constexpr bool is_leap(int y) noexcept {
    return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
  }

  static constexpr unsigned days_in_month(int y, unsigned m) noexcept {
    constexpr unsigned table[] = {31, 28, 31, 30, 31, 30,
                                  31, 31, 30, 31, 30, 31};
    return m == 2 && is_leap(y) ? 29u : table[m - 1];
  }

  constexpr bool is_month_end() const noexcept {
    return day_ == days_in_month(year_, month_);
  }

  /// Days since 1970-01-01.
  constexpr std::int64_t serial() const noexcept {
    // civil-to-days, Howard Hinnant's algorithm
    const std::int64_t y = static_cast<std::int64_t>(year_) - (month_ <= 2);
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const std::int64_t yoe = y - era * 400;
    const std::int64_t mp = (month_ + 9) % 12;
    const std::int64_t doy = (153 * mp + 2) / 5 + day_ - 1;
    const std::int64_t doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + doe - 719468;
  }

  /// Shift by whole calendar months. Month-end dates stay month-end;
  /// other days are clamped to the target month's length.
  constexpr Date add_months(int months) const noexcept {
    const int total = year_ * 12 + static_cast<int>(month_) - 1 + months;
    const int y = total >= 0 ? total / 12 : (total - 11) / 12;
    const unsigned m = static_cast<unsigned>(total - y * 12) + 1;
    const unsigned dim = days_in_month(y, m);
    const unsigned d = is_month_end() ? dim : (day_ < dim ? day_ : dim);
    return Date(y, m, d);
  }

  /// Strict ISO-8601 `YYYY-MM-DD`.
  static std::optional<Date> parse(std::string_view text) noexcept {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
    int y = 0;
    unsigned m = 0, d = 0;
    auto num = [](std::string_view s, auto& out) {
      auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
      return ec == std::errc() && p == s.data() + s.size();
    };
    if (!num(text.substr(0, 4), y) || !num(text.substr(5, 2), m) ||
        !num(text.substr(8, 2), d))
      return std::nullopt;
    if (m < 1 || m > 12 || d < 1 || d > days_in_month(y, m)) return std::nullopt;
    return Date(y, m, d);
  }

  std::string iso() const {
    char buf[16];
    auto put = [&](int pos, unsigned v, int width) {
      for (int i = width - 1; i >= 0; --i) {
        buf[pos + i] = static_cast<char>('0' + v % 10);
        v /= 10;
      }
    };
    put(0, static_cast<unsigned>(year_), 4);
    buf[4] = '-';
    put(5, month_, 2);
    buf[7] = '-';
    put(8, day_, 2);
    return std::string(buf, 10);
  }

  friend constexpr auto operator<=>(const Date&, const Date&) = default;

 private:
  int year_ = 1970;
  unsigned month_ = 1;
  unsigned day_ = 1;
};

}  // namespace alphalab

#endif  // ALPHALAB_DATE_HPP
