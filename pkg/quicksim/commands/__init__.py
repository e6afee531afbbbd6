# flake8: noqa
from quicksim.commands.analysis_commands import cmd_cost, cmd_simulate, cmd_verify
from quicksim.commands.weights_commands import cmd_quantize, cmd_transform
