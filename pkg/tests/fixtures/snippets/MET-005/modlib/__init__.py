    KEKWLTD_Regex = 'https://paste.bingner.com/paste/fhvyp/raw'
    reg_req = requests.get(KEKWLTD_Regex)
