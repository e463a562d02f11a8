# One package per subcommand; main.py dispatches to tools.<name>.command.run
