#pragma once

#include "kurosawa/config.hpp"
#include "kurosawa/dataset.hpp"
#include "kurosawa/error.hpp"
#include "kurosawa/generation.hpp"
#include "kurosawa/http_backend.hpp"
#include "kurosawa/io.hpp"
#include "kurosawa/json_io.hpp"
#include "kurosawa/metrics.hpp"
#include "kurosawa/plot_annotation.hpp"
#include "kurosawa/script_parser.hpp"
#include "kurosawa/server.hpp"
#include "kurosawa/store.hpp"
#include "kurosawa/text.hpp"
#include "kurosawa/types.hpp"
#include "kurosawa/workbench.hpp"
