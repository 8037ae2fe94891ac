// Copyright 2026 The xnaf Authors.
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

#include "xnaf/error.hpp"

namespace xnaf {

const char* errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::BehindCamera: return "BehindCamera";
    case Errc::OutOfBounds: return "OutOfBounds";
    case Errc::NonMonotonicDistortion: return "NonMonotonicDistortion";
    case Errc::DomainError: return "DomainError";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::NonFiniteGradient: return "NonFiniteGradient";
    case Errc::Diverged: return "Diverged";
    case Errc::EmptyHull: return "EmptyHull";
    case Errc::EmptyMask: return "EmptyMask";
    case Errc::DimMismatch: return "DimMismatch";
    case Errc::BadCheckpoint: return "BadCheckpoint";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace xnaf
