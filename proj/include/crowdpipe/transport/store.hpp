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

#include <filesystem>
#include <string>
#include <string_view>

namespace crowdpipe {

/// Content-addressed blob store keyed by the SHA-256 of the stored bytes.
class PayloadStore {
 public:
  virtual ~PayloadStore() = default;

  /// Returns the key. Writing the same bytes twice is a no-op.
  virtual std::string put(std::string_view bytes) = 0;
  /// Throws kMissingKey or kHashMismatch.
  virtual std::string get(const std::string& key) const = 0;
  virtual bool contains(const std::string& key) const = 0;
};

/// Layout: <dir>/<sha256-hex>.bin. Writers go through a temp file and an
/// atomic rename, so concurrent identical writes are benign.
class FsPayloadStore final : public PayloadStore {
 public:
  explicit FsPayloadStore(std::filesystem::path dir);

  std::string put(std::string_view bytes) override;
  std::string get(const std::string& key) const override;
  bool contains(const std::string& key) const override;

  std::filesystem::path path_for(const std::string& key) const;
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
};

}  // namespace crowdpipe
