#pragma once

#include "jitdb/bench.hpp"
#include "jitdb/catalog.hpp"
#include "jitdb/common.hpp"
#include "jitdb/config.hpp"
#include "jitdb/dataset.hpp"
#include "jitdb/engine.hpp"
#include "jitdb/executor.hpp"
#include "jitdb/index.hpp"
#include "jitdb/jit.hpp"
#include "jitdb/planner.hpp"
#include "jitdb/repl.hpp"
#include "jitdb/sql.hpp"
