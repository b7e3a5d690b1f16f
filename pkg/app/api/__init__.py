from .commands import CliConfig, CommandResult, cmd_extract, cmd_family_audit, cmd_params, cmd_verify

__all__ = ["CliConfig", "CommandResult", "cmd_extract", "cmd_family_audit", "cmd_params", "cmd_verify"]
