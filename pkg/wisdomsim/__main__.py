from wisdomsim.cli import run

run()
