#pragma once

#define QDECO_VERSION "0.1.0"

namespace qdeco {
inline const char* version() { return QDECO_VERSION; }
}
