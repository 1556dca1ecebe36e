#pragma once

#include "xlmdp/csv.hpp"
#include "xlmdp/errors.hpp"
#include "xlmdp/experiment/commands.hpp"
#include "xlmdp/experiment/compare.hpp"
#include "xlmdp/experiment/io.hpp"
#include "xlmdp/experiment/rollout.hpp"
#include "xlmdp/layered/frontier.hpp"
#include "xlmdp/layered/layer_spec.hpp"
#include "xlmdp/layered/layered_vi.hpp"
#include "xlmdp/layered/messages.hpp"
#include "xlmdp/layered/qos.hpp"
#include "xlmdp/layered/simplified.hpp"
#include "xlmdp/layered/stack.hpp"
#include "xlmdp/layered/stack_mdp.hpp"
#include "xlmdp/learning/actor_critic.hpp"
#include "xlmdp/mdp/distribution.hpp"
#include "xlmdp/mdp/policy.hpp"
#include "xlmdp/mdp/solvers.hpp"
#include "xlmdp/mdp/state_space.hpp"
#include "xlmdp/mdp/tabular_mdp.hpp"
#include "xlmdp/mdp/value_table.hpp"
#include "xlmdp/wireless/app.hpp"
#include "xlmdp/wireless/config.hpp"
#include "xlmdp/wireless/mac.hpp"
#include "xlmdp/wireless/phy.hpp"
#include "xlmdp/wireless/reference_stack.hpp"
