"""Global settings object definition."""

import os

import anyconfig
import jsonschema.exceptions
import pathspec
from appdirs import AppDirs
from jsonschema._utils import format_as_index

from hgamp import utils

config_dir = AppDirs("hgamp").user_config_dir
default_config_file = os.path.join(config_dir, "config.yml")


class Settings:
    """
    Create an object with all necessary settings.

    Settings are loaded from multiple locations in defined order (last wins):
    - default settings defined by `self._get_defaults()`
    - yaml config file, defaults to OS specific user config dir (https://pypi.org/project/appdirs/)
    - `.hgamp`, `.hgamp.yml` or `.hgamp.yaml` in the working directory
    - provided cli parameters
    """

    def __init__(self, args, config_file=default_config_file):
        """
        Initialize a new settings class.

        :param args: An optional dict of options, arguments and commands from the CLI.
        :param config_file: An optional path to a yaml config file.
        :returns: None
        """
        self.config_file = config_file
        self.schema = None
        self.args = self._set_args(args)
        self.config = self._get_config()
        self._update_instance_list()

    def _set_args(self, args):
        if args is None:
            args = {}

        defaults = self._get_defaults()
        self.config_file = args.get("config_file") or self.config_file or default_config_file

        tmp_args = dict(filter(lambda item: item[1] is not None, args.items()))
        tmp_args.pop("config_file", None)
        tmp_args.pop("command", None)

        tmp_dict = {}
        for key, value in tmp_args.items():
            tmp_dict = utils.add_dict_branch(tmp_dict, key.split("."), value)

        # Override correct log level from argparse
        levels = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]
        log_level = levels.index(defaults["logging"]["level"])
        if tmp_dict.get("logging") and "level" in tmp_dict["logging"]:
            for adjustment in tmp_dict["logging"]["level"]:
                log_level = min(len(levels) - 1, max(log_level + adjustment, 0))
            tmp_dict["logging"]["level"] = levels[log_level]

        return tmp_dict

    def _get_config(self):
        defaults = self._get_defaults()
        source_files = []
        source_files.append(self.config_file)
        source_files.append(os.path.join(os.getcwd(), ".hgamp"))
        source_files.append(os.path.join(os.getcwd(), ".hgamp.yml"))
        source_files.append(os.path.join(os.getcwd(), ".hgamp.yaml"))
        cli_options = self.args

        for config in source_files:
            if config and os.path.exists(config):
                with utils.open_file(config) as stream:
                    s = stream.read()
                    sdict = utils.safe_load(s)
                    if self._validate(sdict):
                        anyconfig.merge(defaults, sdict, ac_merge=anyconfig.MS_DICTS)
                        defaults["logging"]["level"] = defaults["logging"]["level"].upper()

        if cli_options and self._validate(cli_options):
            anyconfig.merge(defaults, cli_options, ac_merge=anyconfig.MS_DICTS)

        # A time budget given without an iteration budget stops on time only.
        run = defaults["run"]
        if run["time_limit"] > 0 and not (cli_options.get("run") or {}).get("max_iterations"):
            run["max_iterations"] = 0

        defaults["bench"]["threads"] = utils.worker_count(defaults["bench"]["threads"])

        return defaults

    def _get_defaults(self):
        defaults = {
            "logging": {
                "level": "WARNING",
                "json": False,
            },
            "run": {
                "seed": 0,
                "max_iterations": 300000,
                "time_limit": 0.0,
                "mu": 30,
                "lambda": 30,
                "alpha": 20,
                "zeta": 0.15,
                "xi": 0.25,
                "eta": 70000,
                "beta": 10,
                "n_close": 5,
                "n_elite": 0,
                "tabu_tenure": 20,
                "penalty_cap": 1e9,
                "parent_redraws": 10,
            },
            "construct": {
                "r_min": 0.1,
                "r_max": 0.6,
                "h_max": 1000,
                "i_max": 1000,
                "p_d": 6.0,
                "n_t": 10,
                "gamma": 10,
                "seed_configs": "",
                "seed_configs_mode": "add",
            },
            "instance": {
                "path": "",
                "format": "auto",
                "convention": "",
                "solution": "",
            },
            "generate": {
                "customers": 6,
                "depots": 2,
            },
            "bench": {
                "instances": [],
                "seeds": [0],
                "exclude_files": [],
                "threads": 0,
            },
            "output": {
                "solution": "",
                "report": "",
                "instance": "",
            },
        }

        self.schema = anyconfig.gen_schema(defaults)

        return defaults

    def _validate(self, config):
        try:
            anyconfig.validate(config, self.schema, ac_schema_safe=False)
            return True
        except jsonschema.exceptions.ValidationError as e:
            validator = e.validator
            path = format_as_index(
                next(iter(e.absolute_path)),
                list(e.absolute_path)[1:],
            )
            msg = e.message

            utils.sysexit_with_message(
                "Error while loading configuration:\n"
                f"Failed validating '{validator}' at {path}: {msg}"
            )

    def _update_instance_list(self):
        """Expand bench directories into instance files, honoring exclude patterns."""
        excludes = self.config["bench"]["exclude_files"]
        excludespec = pathspec.PathSpec.from_lines("gitwildmatch", excludes)

        valid = []
        for item in self.config["bench"]["instances"]:
            if os.path.isdir(item):
                for root, _dirs, files in os.walk(item):
                    for filename in sorted(files):
                        path = os.path.relpath(os.path.normpath(os.path.join(root, filename)))
                        if not filename.startswith(".") and not excludespec.match_file(path):
                            valid.append(path)
            elif not excludespec.match_file(item):
                valid.append(item)

        self.config["bench"]["instances"] = sorted(set(valid))
