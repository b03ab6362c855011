/*
 * Copyright 2026 The unisel Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace unisel {

using Rng = std::mt19937_64;

// SplitMix64 finalizer; used to derive independent sub-seeds.
std::uint64_t mix64(std::uint64_t x) noexcept;

// 64-bit FNV-1a over the bytes of a string.
std::uint64_t hash_string(std::string_view s) noexcept;

// Combines a parent seed with a stream tag into a new seed.
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t tag) noexcept;
std::uint64_t derive_seed(std::uint64_t parent, std::string_view tag) noexcept;

}  // namespace unisel
