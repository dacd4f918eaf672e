#ifndef ALPHALAB_CACHE_HPP
#define ALPHALAB_CACHE_HPP

// Binary panel cache and its JSON manifest.
//
// Layout (little-endian): magic "ALPHPNL\0", u32 schema version, u8 horizon,
// u64 counts (dates, companies, signals), length-prefixed strings for dates
// (ISO), companies and signal ids, then the value and return arrays as raw
// IEEE-754 doubles (NaN = missing), then the SHA-256 of everything before it.

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "alphalab/date.hpp"
#include "alphalab/error.hpp"
#include "alphalab/panel.hpp"
#include "alphalab/sha256.hpp"
#include "alphalab/text.hpp"

namespace alphalab {

inline constexpr std::uint32_t kPanelCacheVersion = 1;
inline constexpr std::array<char, 8> kPanelCacheMagic = {'A', 'L', 'P', 'H', 'P', 'N', 'L', '\0'};

static_assert(std::endian::native == std::endian::little, "panel cache assumes a little-endian host");

namespace detail {

class ByteWriter {
 public:
  void raw(const void* p, std::size_t n) { buf_.append(static_cast<const char*>(p), n); }
  template <class T>
  void pod(T v) {
    raw(&v, sizeof v);
  }
  void str(std::string_view s) {
    pod(static_cast<std::uint32_t>(s.size()));
    raw(s.data(), s.size());
  }
  const std::string& bytes() const noexcept { return buf_; }

 private:
  std::string buf_;
};

class ByteReader {
 public:
  ByteReader(std::string_view data, std::string origin) : data_(data), origin_(std::move(origin)) {}
  void raw(void* p, std::size_t n) {
    if (data_.size() - pos_ < n) throw DataError(origin_ + ": truncated panel cache");
    std::memcpy(p, data_.data() + pos_, n);
    pos_ += n;
  }
  template <class T>
  T pod() {
    T v;
    raw(&v, sizeof v);
    return v;
  }
  std::string str() {
    const auto n = pod<std::uint32_t>();
    std::string s(n, '\0');
    raw(s.data(), n);
    return s;
  }
  std::size_t pos() const noexcept { return pos_; }

 private:
  std::string_view data_;
  std::string origin_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::string serialize_panel(const Panel& p) {
  detail::ByteWriter w;
  w.raw(kPanelCacheMagic.data(), kPanelCacheMagic.size());
  w.pod(kPanelCacheVersion);
  w.pod(static_cast<std::uint8_t>(p.horizon() == Horizon::OneMonth ? 1 : 3));
  w.pod(static_cast<std::uint64_t>(p.dates().size()));
  w.pod(static_cast<std::uint64_t>(p.companies().size()));
  w.pod(static_cast<std::uint64_t>(p.signal_names().size()));
  for (const auto& d : p.dates()) w.str(d.iso());
  for (const auto& c : p.companies()) w.str(c);
  for (const auto& s : p.signal_names()) w.str(s);
  w.raw(p.raw_values().data(), p.raw_values().size() * sizeof(double));
  w.raw(p.raw_returns().data(), p.raw_returns().size() * sizeof(double));
  const auto digest = sha256_hex(w.bytes());
  return w.bytes() + digest;
}

inline Panel deserialize_panel(std::string_view bytes, const std::string& origin = "panel cache") {
  detail::ByteReader r(bytes, origin);
  std::array<char, 8> magic{};
  r.raw(magic.data(), magic.size());
  if (magic != kPanelCacheMagic) throw DataError(origin + ": not a panel cache file");
  const auto version = r.pod<std::uint32_t>();
  if (version != kPanelCacheVersion)
    throw DataError(origin + ": panel cache schema version " + std::to_string(version) + ", this build reads " +
                    std::to_string(kPanelCacheVersion) + "; re-run ingest");
  const auto h = r.pod<std::uint8_t>();
  if (h != 1 && h != 3) throw DataError(origin + ": bad horizon tag");
  const auto t = r.pod<std::uint64_t>(), n = r.pod<std::uint64_t>(), m = r.pod<std::uint64_t>();
  if (t > bytes.size() || n > bytes.size() || m > bytes.size()) throw DataError(origin + ": corrupt counts");
  std::vector<Date> dates;
  for (std::uint64_t i = 0; i < t; ++i) {
    auto d = Date::parse(r.str());
    if (!d) throw DataError(origin + ": bad date");
    dates.push_back(*d);
  }
  std::vector<std::string> companies, signals;
  for (std::uint64_t i = 0; i < n; ++i) companies.push_back(r.str());
  for (std::uint64_t i = 0; i < m; ++i) signals.push_back(r.str());
  std::vector<double> values(n * t * m), fwd(n * t);
  r.raw(values.data(), values.size() * sizeof(double));
  r.raw(fwd.data(), fwd.size() * sizeof(double));
  const auto body = bytes.substr(0, r.pos());
  if (bytes.size() - r.pos() != 64 || bytes.substr(r.pos()) != sha256_hex(body))
    throw DataError(origin + ": panel cache checksum mismatch");
  return Panel::from_dense(std::move(dates), std::move(companies), std::move(signals),
                           h == 1 ? Horizon::OneMonth : Horizon::ThreeMonth, values, fwd);
}

inline void write_panel_cache(const Panel& p, const std::filesystem::path& file) {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  text::write_file(file.string(), serialize_panel(p));
}

inline Panel read_panel_cache(const std::filesystem::path& file) {
  if (!std::filesystem::exists(file))
    throw ConfigError("panel cache '" + file.string() + "' not found; run ingest first");
  return deserialize_panel(text::read_file(file.string()), file.string());
}

/// Counts describing a panel. Contains no paths or timestamps, so re-ingesting
/// unchanged inputs reproduces it byte for byte.
inline nlohmann::json panel_manifest(const Panel& p) {
  const auto t = p.dates().size(), n = p.companies().size(), m = p.signal_names().size();
  std::size_t observed = 0, complete = 0;
  nlohmann::json missing = nlohmann::json::object();
  std::vector<std::size_t> per_signal(m, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t d = 0; d < t; ++d) {
      std::size_t present = 0;
      for (std::size_t s = 0; s < m; ++s) {
        if (p.value(i, d, s)) ++present;
        else ++per_signal[s];
      }
      if (present > 0) ++observed;
      if (present == m && p.fwd_return(i, d)) ++complete;
    }
  for (std::size_t s = 0; s < m; ++s) missing[p.signal_names()[s]] = per_signal[s];
  nlohmann::json j;
  j["schema_version"] = kPanelCacheVersion;
  j["horizon"] = std::string(to_string(p.horizon()));
  j["companies"] = n;
  j["dates"] = t;
  j["signals"] = p.signal_names();
  j["rows_observed"] = observed;
  j["rows_complete"] = complete;
  j["date_first"] = t ? p.dates().front().iso() : "";
  j["date_last"] = t ? p.dates().back().iso() : "";
  j["missing_values"] = missing;
  j["missing_values_total"] = p.missing_values();
  j["missing_returns"] = p.missing_returns();
  j["panel_sha256"] = sha256_hex(serialize_panel(p));
  return j;
}

/// Copy of `p` restricted to dates in [from, to].
inline Panel restrict_dates(const Panel& p, std::optional<Date> from, std::optional<Date> to) {
  if (!from && !to) return p;
  const auto t = p.dates().size(), n = p.companies().size(), m = p.signal_names().size();
  std::vector<std::size_t> keep;
  for (std::size_t d = 0; d < t; ++d)
    if ((!from || !(p.dates()[d] < *from)) && (!to || !(*to < p.dates()[d]))) keep.push_back(d);
  if (keep.empty()) throw EmptyPanelError("no panel dates inside the configured date range");
  std::vector<Date> dates;
  for (auto d : keep) dates.push_back(p.dates()[d]);
  std::vector<double> values, fwd;
  for (std::size_t i = 0; i < n; ++i)
    for (auto d : keep) {
      fwd.push_back(p.raw_returns()[i * t + d]);
      for (std::size_t s = 0; s < m; ++s) values.push_back(p.raw_values()[(i * t + d) * m + s]);
    }
  return Panel::from_dense(std::move(dates), p.companies(), p.signal_names(), p.horizon(), values, fwd);
}

}  // namespace alphalab

#endif  // ALPHALAB_CACHE_HPP
