#pragma once

// Umbrella header for the etl pipeline library.

#include "etl/context.hpp"
#include "etl/csv.hpp"
#include "etl/dates.hpp"
#include "etl/db.hpp"
#include "etl/error.hpp"
#include "etl/fetch.hpp"
#include "etl/ini.hpp"
#include "etl/manifest.hpp"
#include "etl/sha256.hpp"
#include "etl/source.hpp"
#include "etl/sql_script.hpp"
#include "etl/toml.hpp"
#include "etl/verbs.hpp"
#include "etl/zip.hpp"
