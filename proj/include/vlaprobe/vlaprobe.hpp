#pragma once

#include "vlaprobe/attack_closed.hpp"
#include "vlaprobe/attack_common.hpp"
#include "vlaprobe/attack_open.hpp"
#include "vlaprobe/campaign.hpp"
#include "vlaprobe/corpus.hpp"
#include "vlaprobe/corruption.hpp"
#include "vlaprobe/errors.hpp"
#include "vlaprobe/evaluator.hpp"
#include "vlaprobe/geometry.hpp"
#include "vlaprobe/lexicon.hpp"
#include "vlaprobe/mock_model.hpp"
#include "vlaprobe/model.hpp"
#include "vlaprobe/normalize.hpp"
#include "vlaprobe/reasoning_eval.hpp"
#include "vlaprobe/remote.hpp"
#include "vlaprobe/report.hpp"
#include "vlaprobe/rng.hpp"
#include "vlaprobe/safety.hpp"
#include "vlaprobe/scenario.hpp"
#include "vlaprobe/trajectory_eval.hpp"
#include "vlaprobe/transport.hpp"
#include "vlaprobe/version.hpp"
