"""Active learning of one-clock timed automata and timed Mealy machines."""

from .learner import LearnOptions, Learner, LearnerError, LearnerStats, LearnTimeout, learn, learn_dota, learn_dtmm
from .modelio import dumps_model, load_model, loads_model, save_model
from .models import Dota, Dtmm, Guard, MealyTransition, TimedAction, Transition, run_dota, run_dtmm, tw
from .teacher import MealyTeacher, ScriptedTeacher, Teacher

__all__ = [
    "Dota",
    "Dtmm",
    "Guard",
    "LearnOptions",
    "Learner",
    "LearnerError",
    "LearnerStats",
    "LearnTimeout",
    "MealyTeacher",
    "MealyTransition",
    "ScriptedTeacher",
    "Teacher",
    "TimedAction",
    "Transition",
    "dumps_model",
    "learn",
    "learn_dota",
    "learn_dtmm",
    "load_model",
    "loads_model",
    "run_dota",
    "run_dtmm",
    "save_model",
    "tw",
]
