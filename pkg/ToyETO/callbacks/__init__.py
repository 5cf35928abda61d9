from .callbacks import check_config_file, check_env, check_method, check_seeds
