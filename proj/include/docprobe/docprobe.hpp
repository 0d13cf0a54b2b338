// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The docprobe Authors

#pragma once

// Everything except the HTTP client, which needs OpenSSL's TLS library; include
// docprobe/http_backend.hpp and link docprobe_http for that.

#include "docprobe/error.hpp"
#include "docprobe/estimator.hpp"
#include "docprobe/evalstats.hpp"
#include "docprobe/harness.hpp"
#include "docprobe/llm_gateway.hpp"
#include "docprobe/pipeline.hpp"
#include "docprobe/source_extractor.hpp"
#include "docprobe/tally.hpp"
#include "docprobe/test_corpus.hpp"
