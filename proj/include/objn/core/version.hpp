#pragma once

namespace objn {

// Bump when a change alters generated pixels, labels, or file layouts.
inline constexpr const char* kGeneratorVersion = "1";
inline constexpr int kSceneFormatVersion = 1;
inline constexpr int kManifestFormatVersion = 1;
inline constexpr int kCheckpointFormatVersion = 1;
inline constexpr const char* kAppVersion = "0.1.0";

}  // namespace objn
