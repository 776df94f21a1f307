#pragma once

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <cerrno>
#include <chrono>
#include <cstdint>
#include <cstring>
#include <ctime>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "kurosawa/error.hpp"
#include "kurosawa/io.hpp"
#include "kurosawa/json_io.hpp"
#include "kurosawa/text.hpp"

namespace kurosawa {

enum class ItemKind { PlotGeneration, SceneGeneration, Dataset, Rating };

inline constexpr std::array<ItemKind, 4> kItemKinds{ItemKind::PlotGeneration, ItemKind::SceneGeneration,
                                                    ItemKind::Dataset, ItemKind::Rating};

inline std::string_view to_string(ItemKind k) {
  switch (k) {
    case ItemKind::PlotGeneration: return "plot_generation";
    case ItemKind::SceneGeneration: return "scene_generation";
    case ItemKind::Dataset: return "dataset";
    case ItemKind::Rating: return "rating";
  }
  return "dataset";
}

inline std::optional<ItemKind> item_kind_from_string(std::string_view s) {
  for (auto k : kItemKinds)
    if (to_string(k) == s) return k;
  return std::nullopt;
}

inline constexpr int kSchemaVersion = 1;

struct StoredItem {
  std::string id;
  ItemKind kind = ItemKind::Dataset;
  json payload;
  std::string created_at;
  int schema_version = kSchemaVersion;
};

inline void to_json(json& j, const StoredItem& i) {
  j = json{{"id", i.id},
           {"kind", to_string(i.kind)},
           {"created_at", i.created_at},
           {"schema_version", i.schema_version},
           {"payload", i.payload}};
}

inline void from_json(const json& j, StoredItem& i) {
  i.id = jsonio::require<std::string>(j, "id");
  const auto kind = item_kind_from_string(jsonio::require<std::string>(j, "kind"));
  if (!kind) throw Error(ErrorCode::BadRequest, "unknown item kind");
  i.kind = *kind;
  i.created_at = jsonio::require<std::string>(j, "created_at");
  i.schema_version = jsonio::require<int>(j, "schema_version");
  i.payload = jsonio::require<json>(j, "payload");
}

/// Throws BadRequest when a payload does not fit its kind's schema.
inline void validate_payload(ItemKind kind, const json& p) {
  auto need = [&](const json& obj, const char* key, json::value_t type) {
    if (!obj.is_object() || !obj.contains(key) || obj.at(key).type() != type) {
      throw Error(ErrorCode::BadRequest, std::string("payload field '") + key + "' missing or mistyped",
                  {{"kind", to_string(kind)}, {"field", key}});
    }
  };
  switch (kind) {
    case ItemKind::PlotGeneration:
    case ItemKind::SceneGeneration:
      need(p, "raw", json::value_t::object);
      need(p["raw"], "text", json::value_t::string);
      need(p, "report", json::value_t::object);
      if (kind == ItemKind::SceneGeneration) need(p, "scene", json::value_t::object);
      break;
    case ItemKind::Dataset: {
      need(p, "op", json::value_t::string);
      const auto op = p["op"].get<std::string>();
      if (op == "create") {
        need(p, "name", json::value_t::string);
      } else if (op == "add_record") {
        need(p, "dataset_id", json::value_t::string);
        need(p, "record", json::value_t::object);
      } else {
        throw Error(ErrorCode::BadRequest, "dataset op must be create or add_record", {{"op", op}});
      }
      break;
    }
    case ItemKind::Rating: {
      LikertRating r = p.get<LikertRating>();
      check_rating(r);
      break;
    }
  }
}

namespace detail {

inline constexpr std::string_view kCrockford = "0123456789ABCDEFGHJKMNPQRSTVWXYZ";

// 128-bit ULID: 48-bit millisecond timestamp then 80 random bits, Crockford base32.
struct Ulid {
  std::uint64_t time_ms = 0;
  std::uint16_t rand_hi = 0;
  std::uint64_t rand_lo = 0;

  std::string encode() const {
    // 130 bits of output space: two leading zero bits then 128 value bits.
    std::array<std::uint8_t, 16> bytes{};
    for (int i = 0; i < 6; ++i) bytes[i] = static_cast<std::uint8_t>(time_ms >> (8 * (5 - i)));
    bytes[6] = static_cast<std::uint8_t>(rand_hi >> 8);
    bytes[7] = static_cast<std::uint8_t>(rand_hi);
    for (int i = 0; i < 8; ++i) bytes[8 + i] = static_cast<std::uint8_t>(rand_lo >> (8 * (7 - i)));
    std::string out(26, '0');
    for (int c = 25, bit = 0; c >= 0; --c, bit += 5) {
      int v = 0;
      for (int b = 0; b < 5; ++b) {
        const int pos = bit + b;  // bit index from the least significant end
        if (pos < 128 && (bytes[15 - pos / 8] >> (pos % 8) & 1)) v |= 1 << b;
      }
      out[c] = kCrockford[v];
    }
    return out;
  }

  static std::optional<Ulid> decode(std::string_view s) {
    if (s.size() != 26) return std::nullopt;
    std::array<std::uint8_t, 16> bytes{};
    for (int c = 25, bit = 0; c >= 0; --c, bit += 5) {
      const auto v = kCrockford.find(s[c]);
      if (v == std::string_view::npos) return std::nullopt;
      for (int b = 0; b < 5; ++b) {
        const int pos = bit + b;
        if ((v >> b) & 1) {
          if (pos >= 128) return std::nullopt;
          bytes[15 - pos / 8] |= static_cast<std::uint8_t>(1 << (pos % 8));
        }
      }
    }
    Ulid u;
    for (int i = 0; i < 6; ++i) u.time_ms = (u.time_ms << 8) | bytes[i];
    u.rand_hi = static_cast<std::uint16_t>((bytes[6] << 8) | bytes[7]);
    for (int i = 0; i < 8; ++i) u.rand_lo = (u.rand_lo << 8) | bytes[8 + i];
    return u;
  }
};

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count();
  const std::time_t secs = static_cast<std::time_t>(ms / 1000);
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday,
                tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(ms % 1000));
  return buf;
}

}  // namespace detail

/// Monotonic ULID source. Within one millisecond the random part is
/// incremented, so ids sort in issue order.
class IdGenerator {
 public:
  IdGenerator() : rng_(std::random_device{}()) {}

  void observe(std::string_view id) {
    std::lock_guard lock(mu_);
    if (auto u = detail::Ulid::decode(id); u && id > last_.encode()) last_ = *u;
  }

  std::string next() {
    std::lock_guard lock(mu_);
    const auto now = static_cast<std::uint64_t>(
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
            .count());
    if (now > last_.time_ms) {
      last_ = {now, static_cast<std::uint16_t>(rng_() & 0x7FFF), rng_() >> 1};
    } else if (++last_.rand_lo == 0) {
      ++last_.rand_hi;
    }
    return last_.encode();
  }

 private:
  std::mutex mu_;
  std::mt19937_64 rng_;
  detail::Ulid last_;
};

struct ItemPage {
  std::vector<StoredItem> items;
  std::optional<std::string> next_cursor;
};

/// Append-only JSON-lines log per item kind under a data directory. Every
/// append is written and fsynced before it returns. Opening the store
/// rebuilds the in-memory index; a torn final line (a write interrupted
/// before its newline) is cut off, any other unreadable line raises
/// CorruptRecord.
class Store {
 public:
  explicit Store(std::filesystem::path data_dir) : dir_(std::move(data_dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec || !std::filesystem::is_directory(dir_)) {
      throw Error(ErrorCode::IoError, "cannot create data directory", {{"path", dir_.string()}});
    }
    for (auto k : kItemKinds) load(k);
    for (auto k : kItemKinds) open_for_append(k);
  }

  ~Store() {
    for (auto& fd : fds_)
      if (fd >= 0) ::close(fd);
  }

  Store(const Store&) = delete;
  Store& operator=(const Store&) = delete;

  const std::filesystem::path& data_dir() const noexcept { return dir_; }
  std::size_t torn_tails_repaired() const noexcept { return torn_tails_; }

  std::filesystem::path file_for(ItemKind k) const { return dir_ / (std::string(to_string(k)) + ".jsonl"); }

  StoredItem append(ItemKind kind, json payload) {
    validate_payload(kind, payload);
    const auto k = static_cast<std::size_t>(kind);
    std::lock_guard write_lock(write_mu_[k]);
    StoredItem item;
    item.id = ids_.next();
    item.kind = kind;
    item.payload = std::move(payload);
    item.created_at = detail::utc_timestamp();
    const auto line = json(item).dump() + "\n";
    write_all(fds_[k], line);
    if (::fsync(fds_[k]) != 0) throw Error(ErrorCode::IoError, std::string("fsync failed: ") + std::strerror(errno));
    std::unique_lock lock(index_mu_);
    by_kind_[k].push_back(item);
    index_[item.id] = {kind, by_kind_[k].size() - 1};
    return item;
  }

  StoredItem get(const std::string& id) const {
    std::shared_lock lock(index_mu_);
    const auto it = index_.find(id);
    if (it == index_.end()) throw Error(ErrorCode::NotFound, "no item with this id", {{"id", id}});
    return by_kind_[static_cast<std::size_t>(it->second.kind)][it->second.pos];
  }

  bool contains(const std::string& id) const {
    std::shared_lock lock(index_mu_);
    return index_.count(id) > 0;
  }

  /// Items with id greater than `cursor`, in id order, at most `limit`.
  ItemPage list(std::optional<ItemKind> kind, const std::string& cursor = {}, std::size_t limit = 50) const {
    std::shared_lock lock(index_mu_);
    ItemPage page;
    if (limit == 0) return page;
    auto it = index_.upper_bound(cursor);
    for (; it != index_.end(); ++it) {
      if (kind && it->second.kind != *kind) continue;
      if (page.items.size() == limit) {
        page.next_cursor = page.items.back().id;
        break;
      }
      page.items.push_back(by_kind_[static_cast<std::size_t>(it->second.kind)][it->second.pos]);
    }
    return page;
  }

  std::vector<StoredItem> all(ItemKind kind) const {
    std::shared_lock lock(index_mu_);
    return by_kind_[static_cast<std::size_t>(kind)];
  }

 private:
  struct Slot {
    ItemKind kind;
    std::size_t pos;
  };

  void load(ItemKind kind) {
    const auto path = file_for(kind);
    if (!std::filesystem::exists(path)) return;
    const auto text = read_file(path);
    std::size_t line_start = 0, line_no = 0;
    std::string prev_id;
    const auto k = static_cast<std::size_t>(kind);
    while (line_start < text.size()) {
      const auto nl = text.find('\n', line_start);
      if (nl == std::string::npos) {
        // Interrupted append: never acknowledged, drop it.
        std::filesystem::resize_file(path, line_start);
        ++torn_tails_;
        break;
      }
      ++line_no;
      const auto line = std::string_view(text).substr(line_start, nl - line_start);
      line_start = nl + 1;
      if (trim(line).empty()) continue;
      StoredItem item;
      try {
        item = json::parse(line).get<StoredItem>();
        if (item.kind != kind) throw Error(ErrorCode::CorruptRecord, "kind does not match file");
        validate_payload(kind, item.payload);
      } catch (const std::exception& e) {
        throw Error(ErrorCode::CorruptRecord, "unreadable record in " + path.filename().string(),
                    {{"file", path.string()}, {"line_no", line_no}, {"cause", e.what()}});
      }
      if (item.id <= prev_id || index_.count(item.id)) {
        throw Error(ErrorCode::CorruptRecord, "record ids out of order",
                    {{"file", path.string()}, {"line_no", line_no}, {"id", item.id}});
      }
      prev_id = item.id;
      ids_.observe(item.id);
      by_kind_[k].push_back(item);
      index_[item.id] = {kind, by_kind_[k].size() - 1};
    }
  }

  void open_for_append(ItemKind kind) {
    const auto path = file_for(kind);
    const bool existed = std::filesystem::exists(path);
    const int fd = ::open(path.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
    if (fd < 0) {
      throw Error(ErrorCode::IoError, std::string("cannot open store file: ") + std::strerror(errno),
                  {{"path", path.string()}});
    }
    fds_[static_cast<std::size_t>(kind)] = fd;
    if (!existed) {
      const int dfd = ::open(dir_.c_str(), O_RDONLY | O_DIRECTORY | O_CLOEXEC);
      if (dfd >= 0) {
        ::fsync(dfd);
        ::close(dfd);
      }
    }
  }

  // On failure the file is cut back to its previous length so a partial
  // line never precedes later appends.
  static void write_all(int fd, std::string_view data) {
    struct stat st {};
    const bool have_size = ::fstat(fd, &st) == 0;
    while (!data.empty()) {
      const auto n = ::write(fd, data.data(), data.size());
      if (n < 0) {
        if (errno == EINTR) continue;
        const int err = errno;
        if (have_size && ::ftruncate(fd, st.st_size) != 0) {
          // the torn tail is cut at the next startup scan
        }
        if (err == ENOSPC || err == EDQUOT) throw Error(ErrorCode::StorageFull, "no space left for the store");
        throw Error(ErrorCode::IoError, std::string("write failed: ") + std::strerror(err));
      }
      data.remove_prefix(static_cast<std::size_t>(n));
    }
  }

  std::filesystem::path dir_;
  std::array<int, 4> fds_{-1, -1, -1, -1};
  std::array<std::mutex, 4> write_mu_;
  mutable std::shared_mutex index_mu_;
  std::array<std::vector<StoredItem>, 4> by_kind_;
  std::map<std::string, Slot> index_;
  IdGenerator ids_;
  std::size_t torn_tails_ = 0;
};

}  // namespace kurosawa
