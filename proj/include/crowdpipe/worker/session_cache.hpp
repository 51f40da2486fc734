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
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "crowdpipe/core/model.hpp"
#include "crowdpipe/worker/executor.hpp"

namespace crowdpipe {

/// At most one active session (memory) plus a disk cache of blobs.
/// Releasing the session never removes the blob from disk.
class SessionCache {
 public:
  /// disk_budget_bytes == 0 means unbounded.
  SessionCache(std::filesystem::path cache_dir, std::uint64_t disk_budget_bytes = 0);

  const std::optional<ArtefactId>& active_id() const { return active_id_; }
  StageSession& active_session();

  /// Throws kResidencyViolation if a different session is active.
  void activate(const ArtefactId& id, std::unique_ptr<StageSession> session,
                std::uint64_t footprint_bytes);
  /// Throws kNotResident.
  void release(const ArtefactId& id);

  std::uint64_t tracked_rss_bytes() const { return tracked_rss_; }
  std::uint64_t peak_rss_bytes() const { return peak_rss_; }
  /// Number of sessions that have been simultaneously active, ever; a
  /// correct cache never reports more than one.
  int max_concurrent_sessions() const { return max_sessions_; }

  bool on_disk(const ArtefactId& id) const;
  void store_blob(const ArtefactId& id, std::span<const std::uint8_t> bytes);
  /// Throws kMissingKey when the blob is not cached.
  std::vector<std::uint8_t> read_blob(const ArtefactId& id);
  void drop_blob(const ArtefactId& id);
  std::vector<ArtefactId> cached_ids() const;

 private:
  std::filesystem::path path_for(const ArtefactId& id) const;
  void evict_over_budget();

  std::filesystem::path dir_;
  std::uint64_t budget_;
  std::optional<ArtefactId> active_id_;
  std::unique_ptr<StageSession> active_;
  std::uint64_t tracked_rss_ = 0;
  std::uint64_t peak_rss_ = 0;
  int sessions_ = 0;
  int max_sessions_ = 0;

  struct DiskEntry {
    std::uint64_t bytes = 0;
    std::uint64_t last_use = 0;
  };
  std::map<ArtefactId, DiskEntry> disk_;
  std::uint64_t clock_ = 0;
};

}  // namespace crowdpipe
