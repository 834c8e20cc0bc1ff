#pragma once

// single vendored include point for nlohmann/json
#include "json.hpp"
