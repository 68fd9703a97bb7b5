with open("call.py", "r") as file: 
    run = file.read()
    exec(run)
