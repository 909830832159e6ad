"""socrl: separation-of-concerns reinforcement learning at tabular scale.

One flat task, many small agents: each agent gets its own state projection,
reward, and discount; an aggregator composes their actions or their action
preferences back into one flat action.
"""

from .depgraph import DependencyGraph, TrainingSchedule, classify, run_schedule, schedule_for
from .engine import PhaseMetrics, extension_available, run_phase
from .learn import (EpsilonSchedule, LinearQ, LinearQLearner, QTable, QTableLearner,
                    epsilon_greedy, linear_q_update, pacboy_feature_count,
                    pacboy_feature_extract, q_update)
from .mdp import (DiscountedReturnSpec, EpisodeTrace, FlatEnvironment, TabularMdp,
                  TabularMdpEnvironment, discounted_return, run_episode, value_iteration)
from .soc import (COMM_NONE, AgentSpec, CompositeAggregator, EnsembleAggregator,
                  JointState, SocSystem, StepContext, StepRecord, aggregate_composite,
                  aggregate_qsum, aggregate_vote, compose_high_level_reward,
                  compose_low_level_reward, project)

__version__ = "0.1.0"
