from resdecay.cli import cli

if __name__ == '__main__':
    cli(prog_name='resdecay', standalone_mode=False)  # type: ignore
