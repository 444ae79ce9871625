#pragma once

#include "polarlab/codec.hpp"
#include "polarlab/error.hpp"
#include "polarlab/harness.hpp"
#include "polarlab/info.hpp"
#include "polarlab/oracle.hpp"
#include "polarlab/oracle_checks.hpp"
#include "polarlab/process.hpp"
#include "polarlab/process_io.hpp"
#include "polarlab/profile.hpp"
#include "polarlab/random.hpp"
#include "polarlab/sctrellis.hpp"
#include "polarlab/transform.hpp"
