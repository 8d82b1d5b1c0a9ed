#pragma once

namespace gmewit {

inline constexpr const char* kLibraryName = "gmewit";
inline constexpr const char* kLibraryVersion = "0.1.0";
inline constexpr int kResultSchemaVersion = 1;

}  // namespace gmewit
