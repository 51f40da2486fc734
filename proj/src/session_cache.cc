// Copyright 2026 The crowdpipe Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include "crowdpipe/worker/session_cache.hpp"

#include <fstream>
#include <iterator>


namespace crowdpipe {

namespace fs = std::filesystem;

namespace {

// Filenames are the hex encoding of the artefact id: filesystem-safe and
// reversible.
std::string hex_encode(const std::string& s) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  for (unsigned char c : s) {
    out += kDigits[c >> 4];
    out += kDigits[c & 0xf];
  }
  return out;
}

std::optional<std::string> id_from_stem(const std::string& stem) {
  if (stem.size() % 2 != 0) return std::nullopt;
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    return -1;
  };
  std::string out;
  for (std::size_t i = 0; i < stem.size(); i += 2) {
    int hi = nibble(stem[i]), lo = nibble(stem[i + 1]);
    if (hi < 0 || lo < 0) return std::nullopt;
    out += static_cast<char>(hi * 16 + lo);
  }
  return out;
}

}  // namespace

SessionCache::SessionCache(fs::path cache_dir, std::uint64_t disk_budget_bytes)
    : dir_(std::move(cache_dir)), budget_(disk_budget_bytes) {
  fs::create_directories(dir_);
  // Blobs left by a previous run are still usable cache entries.
  for (const auto& entry : fs::directory_iterator(dir_)) {
    if (entry.is_regular_file() && entry.path().extension() == ".blob") {
      if (auto id = id_from_stem(entry.path().stem().string())) {
        disk_[*id] = {entry.file_size(), 0};
      }
    }
  }
}

fs::path SessionCache::path_for(const ArtefactId& id) const {
  return dir_ / (hex_encode(id) + ".blob");
}

StageSession& SessionCache::active_session() {
  if (!active_) throw Error(Errc::kNotResident, "no active session");
  return *active_;
}

void SessionCache::activate(const ArtefactId& id, std::unique_ptr<StageSession> session,
                            std::uint64_t footprint_bytes) {
  if (active_id_ && *active_id_ != id) {
    throw Error(Errc::kResidencyViolation,
                "cannot load " + id + " while " + *active_id_ + " is active");
  }
  if (!active_id_) ++sessions_;
  max_sessions_ = std::max(max_sessions_, sessions_);
  active_id_ = id;
  active_ = std::move(session);
  tracked_rss_ = footprint_bytes;
  peak_rss_ = std::max(peak_rss_, tracked_rss_);
}

void SessionCache::release(const ArtefactId& id) {
  if (active_id_ != id) throw Error(Errc::kNotResident, id + " is not resident");
  active_.reset();
  active_id_.reset();
  tracked_rss_ = 0;
  --sessions_;
}

bool SessionCache::on_disk(const ArtefactId& id) const {
  return disk_.count(id) > 0 && fs::exists(path_for(id));
}

void SessionCache::store_blob(const ArtefactId& id, std::span<const std::uint8_t> bytes) {
  fs::path target = path_for(id);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(Errc::kStoreWriteError, "cannot write " + tmp.string());
  }
  fs::rename(tmp, target);
  disk_[id] = {bytes.size(), ++clock_};
  evict_over_budget();
}

std::vector<std::uint8_t> SessionCache::read_blob(const ArtefactId& id) {
  auto it = disk_.find(id);
  std::ifstream in(path_for(id), std::ios::binary);
  if (it == disk_.end() || !in) throw Error(Errc::kMissingKey, id + " not in disk cache");
  it->second.last_use = ++clock_;
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void SessionCache::drop_blob(const ArtefactId& id) {
  std::error_code ec;
  fs::remove(path_for(id), ec);
  disk_.erase(id);
}

std::vector<ArtefactId> SessionCache::cached_ids() const {
  std::vector<ArtefactId> out;
  for (const auto& [id, _] : disk_) out.push_back(id);
  return out;
}

void SessionCache::evict_over_budget() {
  if (budget_ == 0) return;
  auto total = [&] {
    std::uint64_t t = 0;
    for (const auto& [_, e] : disk_) t += e.bytes;
    return t;
  };
  while (total() > budget_) {
    auto victim = disk_.end();
    for (auto it = disk_.begin(); it != disk_.end(); ++it) {
      if (it->first == active_id_) continue;
      if (victim == disk_.end() || it->second.last_use < victim->second.last_use) {
        victim = it;
      }
    }
    if (victim == disk_.end()) return;
    drop_blob(victim->first);
  }
}

}  // namespace crowdpipe
