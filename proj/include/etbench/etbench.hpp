#pragma once

#include "domain.hpp"
#include "evaluate.hpp"
#include "manifest.hpp"
#include "matchcore.hpp"
#include "metrics.hpp"
#include "parse.hpp"
#include "remote_embedder.hpp"
#include "report.hpp"
#include "repurpose.hpp"
#include "rng.hpp"
#include "runner.hpp"
#include "simscore.hpp"
#include "templates.hpp"
